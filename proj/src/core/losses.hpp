// Copyright 2026 The FakeMark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <vector>

#include "core/detector.hpp"
#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace fakemark {

// Balancing weights. Defaults follow the training recipe: attribution 10,
// detection 10, HiFi-GAN block 1 (mel 1, feature matching 1, adversarial
// inside the block), watermark l1 0.1, loudness 10, frequency magnitude 1.
struct LossWeights {
  double attribution = 10.0;
  double detection = 10.0;
  double hifigan = 1.0;
  double mel_inner = 1.0;
  double feat_match_inner = 1.0;
  double wm_l1 = 0.1;
  double loudness = 10.0;
  double freq_mag = 1.0;
};

// Spectral analysis config shared by the mel and frequency-magnitude losses.
struct SpectralConfig {
  int n_mels = 80;
  int nfft = 1024;
  int hop = 256;
  double floor = 1e-5;
  double fmin = 0.0;
  double fmax = 8000.0;
};

// ---- classification losses -------------------------------------------------------

// -log p[label] with the 1e-12 probability floor (scalar convenience form).
double attribution_loss(const ClassProbabilities& p, int label);
double detection_loss(const ClassProbabilities& p_on_watermarked, int w);

// Differentiable forms operate on logits; see cross_entropy_logits.

// ---- perceptual losses -------------------------------------------------------------

// Mean absolute difference of log-mel spectrograms (mel of linear magnitude).
Var mel_recon_loss(Tape& t, Var s, Var s_w, const SpectralConfig& cfg = {});

Var wm_l1_loss(Tape& t, Var delta);  // mean |delta|

// softplus(loudness(delta) - loudness(s) + margin); loudness is K-weighted
// mean-square level in dB.
Var loudness_loss(Tape& t, Var delta, Var s, double margin_db = 12.0,
                  double sample_rate = 16000.0);

// K-weighted mean-square level in dB of x.
Var loudness_db(Tape& t, Var x, double sample_rate = 16000.0);

// MSE between time-averaged log-magnitude spectra of unit-energy-normalized
// delta and s.
Var freq_mag_loss(Tape& t, Var delta, Var s, const SpectralConfig& cfg = {});

// ---- adversarial --------------------------------------------------------------------

// Small multi-scale waveform discriminators (least-squares GAN).
struct DiscriminatorConfig {
  int scales = 2;          // input, then /2 average-pooled
  double desk_scale = 1.0;
  int base_channels = 16;
};

class DiscriminatorBundle {
 public:
  DiscriminatorBundle(const DiscriminatorConfig& cfg, Rng& rng);

  struct Scores {
    std::vector<Var> score;                       // one [1,T'] per scale
    std::vector<std::vector<Var>> activations;    // intermediate features
  };
  // train_params=false wraps discriminator weights as constants so generator
  // passes do not deposit gradients into them.
  Scores forward(Tape& t, Var x, bool train_params);

  std::vector<Param*> params();
  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  struct Layer {
    Param w, b;
    int stride, kernel;
  };
  std::vector<std::vector<Layer>> scales_;
};

struct AdversarialLosses {
  Var gen_adv;     // sum over scales of mean (D(s_w) - 1)^2
  Var disc_loss;   // sum of mean (D(s)-1)^2 + mean D(s_w)^2
  Var feat_match;  // mean |D_i(s) - D_i(s_w)| over intermediate layers
};

// s and s_w are [T]; gradients flow into s_w (and the discriminator only for
// disc_loss, which is built with train_params=true on a detached s_w).
AdversarialLosses adversarial_losses(Tape& t, Var s, Var s_w, DiscriminatorBundle& disc);

// ---- total ---------------------------------------------------------------------------

struct LossComponents {
  double attribution = 0, detection = 0, mel = 0, feat_match = 0, adv = 0;
  double wm_l1 = 0, loudness = 0, freq_mag = 0;
};

// weighted sum: 10*att + 10*det + hifigan*(mel_inner*mel + fm_inner*fm + adv)
//             + 0.1*wm_l1 + 10*loudness + 1*freq_mag  (defaults)
double total_loss(const LossComponents& c, const LossWeights& w = {});
Var total_loss(Tape& t, Var att, Var det, Var mel, Var fm, Var adv, Var wm, Var loud,
               Var freq, const LossWeights& w = {});

}  // namespace fakemark
