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

#include "core/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "core/dsp.hpp"

namespace fakemark {

double attribution_loss(const ClassProbabilities& p, int label) {
  if (label < 0 || label >= static_cast<int>(p.p.size()))
    throw std::out_of_range("attribution_loss: label out of range");
  return -std::log(std::max(p.p[static_cast<size_t>(label)], kCeProbFloor));
}

double detection_loss(const ClassProbabilities& p, int w) { return attribution_loss(p, w); }

namespace {

Var log_mel(Tape& t, Var x, const SpectralConfig& cfg) {
  Var mag = stft_mag(t, x, cfg.nfft, cfg.hop);
  static thread_local std::vector<double> fb_cache;
  static thread_local SpectralConfig fb_cfg;
  if (fb_cache.empty() || fb_cfg.n_mels != cfg.n_mels || fb_cfg.nfft != cfg.nfft ||
      fb_cfg.fmin != cfg.fmin || fb_cfg.fmax != cfg.fmax) {
    fb_cache = dsp::mel_filterbank(cfg.n_mels, cfg.nfft, 16000.0, cfg.fmin, cfg.fmax);
    fb_cfg = cfg;
  }
  Var fb = t.constant(Tensor({cfg.n_mels, cfg.nfft / 2 + 1}, fb_cache));
  return log_floor(t, matmul(t, fb, mag), cfg.floor);
}

}  // namespace

Var mel_recon_loss(Tape& t, Var s, Var s_w, const SpectralConfig& cfg) {
  if (s->val.numel() != s_w->val.numel())
    throw std::invalid_argument("mel_recon_loss: length mismatch");
  return mean_abs(t, sub(t, log_mel(t, s_w, cfg), log_mel(t, s, cfg)));
}

Var wm_l1_loss(Tape& t, Var delta) { return mean_abs(t, delta); }

Var loudness_db(Tape& t, Var x, double sample_rate) {
  auto sos = dsp::k_weighting(sample_rate);
  std::vector<BiquadCoeffs> coeffs;
  for (const auto& b : sos) coeffs.push_back({b.b0, b.b1, b.b2, b.a1, b.a2});
  Var kw = iir_filter(t, x, coeffs);
  Var msq = mean_sq(t, kw);
  // 10 * log10(msq + eps)
  return scale(t, log_floor(t, add_const(t, msq, 1e-12), 1e-300), 10.0 / std::log(10.0));
}

Var loudness_loss(Tape& t, Var delta, Var s, double margin_db, double sample_rate) {
  Var diff = sub(t, loudness_db(t, delta, sample_rate), loudness_db(t, s, sample_rate));
  return softplus(t, add_const(t, diff, margin_db));
}

Var freq_mag_loss(Tape& t, Var delta, Var s, const SpectralConfig& cfg) {
  auto normalized = [&](Var x) {
    Var energy = sum_sq(t, x);
    Var norm = add_const(t, vsqrt(t, energy), 1e-12);
    return vdiv(t, x, norm);
  };
  auto avg_log_spectrum = [&](Var x) {
    Var mag = stft_mag(t, normalized(x), cfg.nfft, cfg.hop);
    return mean_cols(t, log_floor(t, mag, cfg.floor));  // [bins]
  };
  Var a = avg_log_spectrum(delta);
  Var b = avg_log_spectrum(s);
  return mean_sq(t, sub(t, a, b));
}

// ---- discriminators --------------------------------------------------------------------

DiscriminatorBundle::DiscriminatorBundle(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.scales < 1) throw std::invalid_argument("discriminator: scales must be >= 1");
  Rng r = rng.derive("discriminator");
  auto scaled = [&](int ch) {
    return std::max(2, static_cast<int>(std::lround(ch * cfg.desk_scale)));
  };
  const int c0 = scaled(cfg.base_channels);
  for (int sc = 0; sc < cfg.scales; ++sc) {
    std::vector<Layer> layers;
    const int chans[4] = {c0, c0 * 2, c0 * 4, c0 * 4};
    const int strides[4] = {1, 4, 4, 1};
    const int kernels[4] = {15, 9, 9, 5};
    int ci = 1;
    for (int l = 0; l < 4; ++l) {
      Layer ly;
      ly.stride = strides[l];
      ly.kernel = kernels[l];
      ly.w = Param("disc" + std::to_string(sc) + ".conv" + std::to_string(l) + ".w",
                   init_conv_fanin({chans[l], ci, kernels[l]}, r));
      ly.b = Param("disc" + std::to_string(sc) + ".conv" + std::to_string(l) + ".b",
                   Tensor::zeros({chans[l]}));
      layers.push_back(std::move(ly));
      ci = chans[l];
    }
    Layer fin;
    fin.stride = 1;
    fin.kernel = 3;
    fin.w = Param("disc" + std::to_string(sc) + ".out.w", init_conv_fanin({1, ci, 3}, r));
    fin.b = Param("disc" + std::to_string(sc) + ".out.b", Tensor::zeros({1}));
    layers.push_back(std::move(fin));
    scales_.push_back(std::move(layers));
  }
}

std::vector<Param*> DiscriminatorBundle::params() {
  std::vector<Param*> out;
  for (auto& sc : scales_)
    for (auto& ly : sc) {
      out.push_back(&ly.w);
      out.push_back(&ly.b);
    }
  return out;
}

DiscriminatorBundle::Scores DiscriminatorBundle::forward(Tape& t, Var x, bool train_params) {
  if (x->val.rank() != 1) throw std::invalid_argument("discriminator: rank-1 input");
  Scores out;
  // scales run on 2x / 4x / ... pooled views of the waveform
  Var cur = avgpool1d(t, reshape(t, x, {1, x->val.numel()}), 2);
  for (size_t sc = 0; sc < scales_.size(); ++sc) {
    if (sc > 0) cur = avgpool1d(t, cur, 2);
    Var h = cur;
    std::vector<Var> acts;
    for (size_t l = 0; l < scales_[sc].size(); ++l) {
      auto& ly = scales_[sc][l];
      Var w = train_params ? leaf(t, ly.w) : t.constant(ly.w.w);
      Var b = train_params ? leaf(t, ly.b) : t.constant(ly.b.w);
      const int64_t pad_total = ly.kernel - ly.stride;
      h = conv1d(t, h, w, b, ly.stride, pad_total / 2, pad_total - pad_total / 2);
      if (l + 1 < scales_[sc].size()) {
        h = leaky_relu(t, h, 0.2);
        acts.push_back(h);
      }
    }
    out.score.push_back(h);
    out.activations.push_back(std::move(acts));
  }
  return out;
}

AdversarialLosses adversarial_losses(Tape& t, Var s, Var s_w, DiscriminatorBundle& disc) {
  if (s->val.numel() != s_w->val.numel())
    throw std::invalid_argument("adversarial_losses: length mismatch");
  AdversarialLosses out;

  // generator view: discriminator weights frozen, gradient flows to s_w
  auto real_g = disc.forward(t, s, false);
  auto fake_g = disc.forward(t, s_w, false);
  Var gen_adv = t.constant(0.0);
  Var feat = t.constant(0.0);
  int64_t n_feat = 0;
  for (size_t sc = 0; sc < fake_g.score.size(); ++sc) {
    gen_adv = add(t, gen_adv, mean_sq(t, add_const(t, fake_g.score[sc], -1.0)));
    for (size_t l = 0; l < fake_g.activations[sc].size(); ++l) {
      feat = add(t, feat,
                 mean_abs(t, sub(t, fake_g.activations[sc][l], real_g.activations[sc][l])));
      ++n_feat;
    }
  }
  out.gen_adv = gen_adv;
  out.feat_match = n_feat > 0 ? scale(t, feat, 1.0 / static_cast<double>(n_feat)) : feat;

  // discriminator view: weights trainable, s_w detached
  Var s_w_detached = t.constant(s_w->val);
  auto real_d = disc.forward(t, s, true);
  auto fake_d = disc.forward(t, s_w_detached, true);
  Var dl = t.constant(0.0);
  for (size_t sc = 0; sc < real_d.score.size(); ++sc) {
    dl = add(t, dl, mean_sq(t, add_const(t, real_d.score[sc], -1.0)));
    dl = add(t, dl, mean_sq(t, fake_d.score[sc]));
  }
  out.disc_loss = dl;
  return out;
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  return w.attribution * c.attribution + w.detection * c.detection +
         w.hifigan * (w.mel_inner * c.mel + w.feat_match_inner * c.feat_match + c.adv) +
         w.wm_l1 * c.wm_l1 + w.loudness * c.loudness + w.freq_mag * c.freq_mag;
}

Var total_loss(Tape& t, Var att, Var det, Var mel, Var fm, Var adv, Var wm, Var loud,
               Var freq, const LossWeights& w) {
  Var s = scale(t, att, w.attribution);
  s = add(t, s, scale(t, det, w.detection));
  s = add(t, s, scale(t, mel, w.hifigan * w.mel_inner));
  s = add(t, s, scale(t, fm, w.hifigan * w.feat_match_inner));
  s = add(t, s, scale(t, adv, w.hifigan));
  s = add(t, s, scale(t, wm, w.wm_l1));
  s = add(t, s, scale(t, loud, w.loudness));
  s = add(t, s, scale(t, freq, w.freq_mag));
  return s;
}

}  // namespace fakemark
