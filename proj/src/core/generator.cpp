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

#include "core/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "core/dsp.hpp"

namespace fakemark {

std::vector<double> vad_mask(const std::vector<double>& samples, int64_t alpha) {
  const int64_t n = static_cast<int64_t>(samples.size());
  if (n < alpha) throw std::invalid_argument("vad_mask: clip shorter than one frame");
  const int64_t frames = n / alpha;
  std::vector<double> rms(static_cast<size_t>(frames));
  double max_rms = 0;
  for (int64_t f = 0; f < frames; ++f) {
    double p = 0;
    for (int64_t i = f * alpha; i < (f + 1) * alpha; ++i)
      p += samples[static_cast<size_t>(i)] * samples[static_cast<size_t>(i)];
    rms[static_cast<size_t>(f)] = std::sqrt(p / static_cast<double>(alpha));
    max_rms = std::max(max_rms, rms[static_cast<size_t>(f)]);
  }
  const double rel_floor = max_rms * std::pow(10.0, -35.0 / 20.0);
  const double threshold = std::max(rel_floor, 1e-4);
  std::vector<double> mask(static_cast<size_t>(frames));
  for (int64_t f = 0; f < frames; ++f)
    mask[static_cast<size_t>(f)] = rms[static_cast<size_t>(f)] > threshold ? 1.0 : 0.0;
  return mask;
}

Var fuse(Tape& t, Var h_s, Var e_w_repeated, const Tensor& mask) {
  if (!h_s->val.same_shape(e_w_repeated->val))
    throw std::invalid_argument("fuse: latent shape mismatch");
  if (mask.rank() != 1 || mask.dim(0) != h_s->val.dim(1))
    throw std::invalid_argument("fuse: mask length mismatch");
  Var m = t.constant(mask);
  return add(t, h_s, mul_rowvec(t, e_w_repeated, m));
}

// ---- variant A --------------------------------------------------------------------

namespace {

// strided conv "same" padding: kernel 2S, total pad S
int64_t pad_left(int64_t s) { return s / 2; }
int64_t pad_right(int64_t k, int64_t s) { return (k - s) - s / 2; }

}  // namespace

GeneratorA::GeneratorA(const GeneratorConfigA& cfg, Rng& rng) : cfg_(cfg) {
  const int k = cfg.kernel;
  int ch = cfg.scaled(cfg.base_channels);
  Rng r = rng.derive("generator-a");
  enc_in_w_ = Param("gen_a.enc_in.w", init_conv_fanin({ch, 1, k}, r));
  enc_in_b_ = Param("gen_a.enc_in.b", Tensor::zeros({ch}));
  for (size_t bi = 0; bi < cfg.strides.size(); ++bi) {
    Block b;
    const int s = cfg.strides[bi];
    const int next = ch * 2;
    b.res_a_w = Param("gen_a.enc" + std::to_string(bi) + ".res_a.w",
                      init_conv_fanin({ch, ch, 3}, r));
    b.res_a_b = Param("gen_a.enc" + std::to_string(bi) + ".res_a.b", Tensor::zeros({ch}));
    b.res_b_w = Param("gen_a.enc" + std::to_string(bi) + ".res_b.w",
                      init_conv_fanin({ch, ch, 3}, r));
    b.res_b_b = Param("gen_a.enc" + std::to_string(bi) + ".res_b.b", Tensor::zeros({ch}));
    b.down_w = Param("gen_a.enc" + std::to_string(bi) + ".down.w",
                     init_conv_fanin({next, ch, 2 * s}, r));
    b.down_b = Param("gen_a.enc" + std::to_string(bi) + ".down.b", Tensor::zeros({next}));
    enc_blocks_.push_back(std::move(b));
    ch = next;
  }
  const int top = ch;  // base * 16
  for (int l = 0; l < cfg.recurrent_layers; ++l) {
    lstm_wx_.emplace_back("gen_a.lstm" + std::to_string(l) + ".wx",
                          init_conv_fanin({4 * top, top}, r));
    lstm_wh_.emplace_back("gen_a.lstm" + std::to_string(l) + ".wh",
                          init_conv_fanin({4 * top, top}, r));
    lstm_b_.emplace_back("gen_a.lstm" + std::to_string(l) + ".b", Tensor::zeros({4 * top}));
  }
  const int latent = cfg.scaled_latent();
  enc_out_w_ = Param("gen_a.enc_out.w", init_conv_fanin({latent, top, k}, r));
  enc_out_b_ = Param("gen_a.enc_out.b", Tensor::zeros({latent}));

  dec_in_w_ = Param("gen_a.dec_in.w", init_conv_fanin({top, latent, k}, r));
  dec_in_b_ = Param("gen_a.dec_in.b", Tensor::zeros({top}));
  ch = top;
  for (size_t bi = 0; bi < cfg.strides.size(); ++bi) {
    Block b;
    const int s = cfg.strides[cfg.strides.size() - 1 - bi];  // reversed strides
    const int next = ch / 2;
    b.down_w = Param("gen_a.dec" + std::to_string(bi) + ".up.w",
                     init_conv_fanin({ch, next, 2 * s}, r));
    b.down_b = Param("gen_a.dec" + std::to_string(bi) + ".up.b", Tensor::zeros({next}));
    b.res_a_w = Param("gen_a.dec" + std::to_string(bi) + ".res_a.w",
                      init_conv_fanin({next, next, 3}, r));
    b.res_a_b = Param("gen_a.dec" + std::to_string(bi) + ".res_a.b", Tensor::zeros({next}));
    b.res_b_w = Param("gen_a.dec" + std::to_string(bi) + ".res_b.w",
                      init_conv_fanin({next, next, 3}, r));
    b.res_b_b = Param("gen_a.dec" + std::to_string(bi) + ".res_b.b", Tensor::zeros({next}));
    dec_blocks_.push_back(std::move(b));
    ch = next;
  }
  // identity start: zero weights make delta = 0 at initialization
  dec_out_w_ = Param("gen_a.dec_out.w", Tensor::zeros({1, ch, k}));
  dec_out_b_ = Param("gen_a.dec_out.b", Tensor::zeros({1}));
}

std::vector<Param*> GeneratorA::params() {
  std::vector<Param*> out{&enc_in_w_, &enc_in_b_};
  for (auto& b : enc_blocks_) {
    out.push_back(&b.res_a_w);
    out.push_back(&b.res_a_b);
    out.push_back(&b.res_b_w);
    out.push_back(&b.res_b_b);
    out.push_back(&b.down_w);
    out.push_back(&b.down_b);
  }
  for (size_t l = 0; l < lstm_wx_.size(); ++l) {
    out.push_back(&lstm_wx_[l]);
    out.push_back(&lstm_wh_[l]);
    out.push_back(&lstm_b_[l]);
  }
  out.push_back(&enc_out_w_);
  out.push_back(&enc_out_b_);
  out.push_back(&dec_in_w_);
  out.push_back(&dec_in_b_);
  for (auto& b : dec_blocks_) {
    out.push_back(&b.down_w);
    out.push_back(&b.down_b);
    out.push_back(&b.res_a_w);
    out.push_back(&b.res_a_b);
    out.push_back(&b.res_b_w);
    out.push_back(&b.res_b_b);
  }
  out.push_back(&dec_out_w_);
  out.push_back(&dec_out_b_);
  return out;
}

Var GeneratorA::encode(Tape& t, Var x) {
  const int k = cfg_.kernel;
  Var h = conv1d(t, x, leaf(t, enc_in_w_), leaf(t, enc_in_b_), 1, k / 2, k - 1 - k / 2);
  for (size_t bi = 0; bi < enc_blocks_.size(); ++bi) {
    auto& b = enc_blocks_[bi];
    // residual unit: two kernel-3 convolutions with skip connection
    Var r = conv1d(t, elu(t, h), leaf(t, b.res_a_w), leaf(t, b.res_a_b), 1, 1, 1);
    r = conv1d(t, elu(t, r), leaf(t, b.res_b_w), leaf(t, b.res_b_b), 1, 1, 1);
    h = add(t, h, r);
    const int s = cfg_.strides[bi];
    h = elu(t, conv1d(t, h, leaf(t, b.down_w), leaf(t, b.down_b), s, pad_left(s),
                      pad_right(2 * s, s)));
  }
  for (size_t l = 0; l < lstm_wx_.size(); ++l)
    h = lstm(t, h, leaf(t, lstm_wx_[l]), leaf(t, lstm_wh_[l]), leaf(t, lstm_b_[l]));
  return conv1d(t, h, leaf(t, enc_out_w_), leaf(t, enc_out_b_), 1, k / 2, k - 1 - k / 2);
}

Var GeneratorA::decode(Tape& t, Var latent) {
  const int k = cfg_.kernel;
  Var h = elu(t, conv1d(t, latent, leaf(t, dec_in_w_), leaf(t, dec_in_b_), 1, k / 2,
                        k - 1 - k / 2));
  for (size_t bi = 0; bi < dec_blocks_.size(); ++bi) {
    auto& b = dec_blocks_[bi];
    const int s = cfg_.strides[cfg_.strides.size() - 1 - bi];
    h = elu(t, conv1d_transpose(t, h, leaf(t, b.down_w), leaf(t, b.down_b), s, pad_left(s),
                                pad_right(2 * s, s)));
    Var r = conv1d(t, elu(t, h), leaf(t, b.res_a_w), leaf(t, b.res_a_b), 1, 1, 1);
    r = conv1d(t, elu(t, r), leaf(t, b.res_b_w), leaf(t, b.res_b_b), 1, 1, 1);
    h = add(t, h, r);
  }
  return conv1d(t, h, leaf(t, dec_out_w_), leaf(t, dec_out_b_), 1, k / 2, k - 1 - k / 2);
}

GeneratorOutput GeneratorA::generate(Tape& t, const std::vector<double>& samples, Var e_w) {
  const int64_t tn = static_cast<int64_t>(samples.size());
  const int64_t alpha = cfg_.alpha();
  if (tn < alpha)
    throw std::invalid_argument("generator A: clip shorter than the downsampling factor");
  if (e_w->val.numel() != cfg_.scaled_latent())
    throw std::invalid_argument("generator A: embedding dimension mismatch");

  const int64_t padded = (tn + alpha - 1) / alpha * alpha;
  std::vector<double> xp(samples);
  // reflect pad to a multiple of alpha (pad < alpha <= tn)
  for (int64_t i = tn; i < padded; ++i)
    xp.push_back(samples[static_cast<size_t>(2 * (tn - 1) - i >= 0 ? 2 * (tn - 1) - i : 0)]);

  Tensor mask_t({static_cast<int64_t>(padded / alpha)});
  {
    auto m = vad_mask(xp, alpha);
    for (size_t i = 0; i < m.size(); ++i) mask_t[static_cast<int64_t>(i)] = m[i];
  }

  Var x = t.constant(Tensor({1, padded}, std::move(xp)));
  Var h_s = encode(t, x);
  Var e_rep = repeat_time(t, e_w, h_s->val.dim(1));
  Var fused = fuse(t, h_s, e_rep, mask_t);
  Var delta_full = decode(t, fused);  // [1, padded]
  Var delta = slice1d(t, reshape(t, delta_full, {padded}), 0, tn);
  Var s_const = t.constant(Tensor({tn}, samples));
  Var s_w = add(t, s_const, delta);

  GeneratorOutput out;
  out.watermarked = s_w;
  out.delta = delta;
  out.vad = mask_t;
  return out;
}

// ---- variant T --------------------------------------------------------------------

GeneratorT::GeneratorT(const GeneratorConfigT& cfg, Rng& rng) : cfg_(cfg) {
  Rng r = rng.derive("generator-t");
  const int bins = cfg.latent_dim();
  const int h = cfg.scaled_hidden();
  // carrier encoder: bins -> h -> ... -> bins (kernel 1 ends, kernel 3 middle)
  std::vector<std::pair<int, int>> cdims;
  cdims.emplace_back(bins, h);
  for (int l = 0; l < cfg.carrier_layers - 2; ++l) cdims.emplace_back(h, h);
  cdims.emplace_back(h, bins);
  for (size_t l = 0; l < cdims.size(); ++l) {
    const int k = (l == 0 || l + 1 == cdims.size()) ? 1 : 3;
    carrier_w_.emplace_back("gen_t.carrier" + std::to_string(l) + ".w",
                            init_conv_fanin({cdims[l].second, cdims[l].first, k}, r));
    carrier_b_.emplace_back("gen_t.carrier" + std::to_string(l) + ".b",
                            Tensor::zeros({cdims[l].second}));
  }
  // embedder: concat(encoded, magnitude, masked embedding) -> watermark magnitude
  std::vector<std::pair<int, int>> edims;
  edims.emplace_back(3 * bins, h);
  for (int l = 0; l < cfg.embedder_layers - 2; ++l) edims.emplace_back(h, h);
  edims.emplace_back(h, bins);
  for (size_t l = 0; l < edims.size(); ++l) {
    const int k = (l == 0 || l + 1 == edims.size()) ? 1 : 3;
    const bool last = l + 1 == edims.size();
    embed_w_.emplace_back("gen_t.embed" + std::to_string(l) + ".w",
                          last ? Tensor::zeros({edims[l].second, edims[l].first, k})
                               : init_conv_fanin({edims[l].second, edims[l].first, k}, r));
    embed_b_.emplace_back("gen_t.embed" + std::to_string(l) + ".b",
                          Tensor::zeros({edims[l].second}));
  }
}

std::vector<Param*> GeneratorT::params() {
  std::vector<Param*> out;
  for (size_t i = 0; i < carrier_w_.size(); ++i) {
    out.push_back(&carrier_w_[i]);
    out.push_back(&carrier_b_[i]);
  }
  for (size_t i = 0; i < embed_w_.size(); ++i) {
    out.push_back(&embed_w_[i]);
    out.push_back(&embed_b_[i]);
  }
  return out;
}

GeneratorOutput GeneratorT::generate(Tape& t, const std::vector<double>& samples, Var e_w) {
  const int64_t tn = static_cast<int64_t>(samples.size());
  if (tn < cfg_.fft_size)
    throw std::invalid_argument("generator T: clip shorter than the FFT size");
  if (e_w->val.numel() != cfg_.latent_dim())
    throw std::invalid_argument("generator T: embedding dimension mismatch");

  auto sp = dsp::stft_analyze(samples, cfg_.fft_size, cfg_.hop);
  Tensor mag({sp.bins, sp.frames}, sp.mag);
  Tensor phase({sp.bins, sp.frames}, sp.phase);

  // frame-domain VAD aligned with STFT frames (hop-sized windows)
  Tensor mask_t({sp.frames});
  {
    const int64_t full = tn / cfg_.hop;
    auto m = vad_mask(samples, cfg_.hop);
    for (int64_t f = 0; f < sp.frames; ++f)
      mask_t[f] = f < full ? m[static_cast<size_t>(f)] : (full > 0 ? m[static_cast<size_t>(full - 1)] : 0.0);
  }

  Var mag_c = t.constant(mag);
  Var h = mag_c;
  for (size_t l = 0; l < carrier_w_.size(); ++l) {
    const int64_t k = carrier_w_[l].w.dim(2);
    h = conv1d(t, h, leaf(t, carrier_w_[l]), leaf(t, carrier_b_[l]), 1, k / 2, k - 1 - k / 2);
    if (l + 1 < carrier_w_.size()) h = elu(t, h);
  }
  Var e_rep = repeat_time(t, e_w, sp.frames);
  Var e_masked = mul_rowvec(t, e_rep, t.constant(mask_t));
  Var z = concat_rows(t, {h, mag_c, e_masked});
  for (size_t l = 0; l < embed_w_.size(); ++l) {
    const int64_t k = embed_w_[l].w.dim(2);
    z = conv1d(t, z, leaf(t, embed_w_[l]), leaf(t, embed_b_[l]), 1, k / 2, k - 1 - k / 2);
    if (l + 1 < embed_w_.size()) z = elu(t, z);
  }
  // z is the watermark magnitude (may be negative); clamp the sum at zero
  Var m_w = relu(t, add(t, mag_c, z));
  Var s_w = istft_with_phase(t, m_w, phase, cfg_.fft_size, cfg_.hop, tn);
  Var delta = istft_with_phase(t, z, phase, cfg_.fft_size, cfg_.hop, tn);

  GeneratorOutput out;
  out.watermarked = s_w;
  out.delta = delta;
  out.vad = mask_t;
  return out;
}

}  // namespace fakemark
