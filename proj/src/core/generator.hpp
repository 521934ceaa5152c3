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

#include <memory>
#include <vector>

#include "core/audio.hpp"
#include "core/message.hpp"
#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace fakemark {

// Energy VAD: frame t covers samples [t*alpha, (t+1)*alpha); active iff the
// frame RMS exceeds both (max frame RMS - 35 dB) and an absolute 1e-4 floor.
std::vector<double> vad_mask(const std::vector<double>& samples, int64_t alpha);

// H_s + diag(m) * E_w, shapes [H, frames] with mask length frames.
Var fuse(Tape& t, Var h_s, Var e_w_repeated, const Tensor& mask);

struct GeneratorOutput {
  Var watermarked;  // [T]
  Var delta;        // [T]
  Tensor vad;       // mask actually applied (frame domain)
};

// ---- waveform variant ------------------------------------------------------------

// Encoder-decoder over raw waveforms: conv in, four residual+downsample
// blocks (strides 2,4,5,8, kernel 2S, channels doubling), two LSTM layers,
// conv out to the latent; the decoder mirrors the convolutions with
// transposed strides. The final decoder layer starts at zero so training
// begins from an identity watermarker.
struct GeneratorConfigA {
  int base_channels = 32;
  int kernel = 7;
  std::vector<int> strides{2, 4, 5, 8};
  int latent_dim = 128;
  int recurrent_layers = 2;
  double desk_scale = 1.0;  // channel factor; strides and ratios unchanged

  int alpha() const {
    int a = 1;
    for (int s : strides) a *= s;
    return a;
  }
  int scaled(int ch) const {
    return std::max(2, static_cast<int>(std::lround(ch * desk_scale)));
  }
  int scaled_latent() const { return scaled(latent_dim); }
};

class GeneratorA {
 public:
  GeneratorA(const GeneratorConfigA& cfg, Rng& rng);

  // Builds the full stage 2-4 pipeline on the tape. The embedding e_w must
  // have the scaled latent dimension. Throws if samples.size() < alpha.
  GeneratorOutput generate(Tape& t, const std::vector<double>& samples, Var e_w);

  // Stage 2 only: carrier latent H_s, shape [H, frames].
  Var encode(Tape& t, Var x_padded);

  std::vector<Param*> params();
  const GeneratorConfigA& config() const { return cfg_; }

 private:
  Var decode(Tape& t, Var latent);

  GeneratorConfigA cfg_;
  // encoder
  Param enc_in_w_, enc_in_b_;
  struct Block {
    Param res_a_w, res_a_b, res_b_w, res_b_b;
    Param down_w, down_b;  // down = strided conv (enc) or transposed (dec)
  };
  std::vector<Block> enc_blocks_;
  std::vector<Param> lstm_wx_, lstm_wh_, lstm_b_;
  Param enc_out_w_, enc_out_b_;
  // decoder
  Param dec_in_w_, dec_in_b_;
  std::vector<Block> dec_blocks_;
  Param dec_out_w_, dec_out_b_;
};

// ---- spectrogram variant ----------------------------------------------------------

// STFT-domain embedder: the carrier magnitude is encoded, concatenated with
// the raw magnitude and the masked watermark embedding, and mapped to an
// additive watermark magnitude. Reconstruction reuses the original phase;
// (M + dM) is clamped at zero before the inverse transform.
struct GeneratorConfigT {
  int fft_size = 1024;
  int hop = 256;
  int carrier_layers = 4;
  int embedder_layers = 5;
  int hidden = 256;
  double desk_scale = 1.0;

  int latent_dim() const { return fft_size / 2 + 1; }  // 513
  int scaled_hidden() const {
    return std::max(8, static_cast<int>(std::lround(hidden * desk_scale)));
  }
};

class GeneratorT {
 public:
  GeneratorT(const GeneratorConfigT& cfg, Rng& rng);

  GeneratorOutput generate(Tape& t, const std::vector<double>& samples, Var e_w);

  std::vector<Param*> params();
  const GeneratorConfigT& config() const { return cfg_; }

 private:
  GeneratorConfigT cfg_;
  std::vector<Param> carrier_w_, carrier_b_;
  std::vector<Param> embed_w_, embed_b_;
};

}  // namespace fakemark
