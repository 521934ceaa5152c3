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

#include "core/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "core/subprocess.hpp"

namespace fakemark {

void ClassProbabilities::validate() const {
  double s = 0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::logic_error("class probabilities out of [0,1]");
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-6) throw std::logic_error("class probabilities do not sum to 1");
}

Detector::Detector(const FrontEndSpec& spec, int num_classes, Rng& rng)
    : spec_(spec), num_classes_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("detector: num_classes must be >= 1");
  Rng r = rng.derive("detector");
  const int feat = spec_.scaled_feature_dim();
  if (spec_.kind == FrontEndSpec::Kind::builtin_conv) {
    auto scaled = [&](int ch) {
      return std::max(4, static_cast<int>(std::lround(ch * spec_.desk_scale)));
    };
    // 5 blocks, strides 4*4*4*5*1 = 320 samples (~20 ms at 16 kHz)
    const int chans[5] = {scaled(32), scaled(64), scaled(64), scaled(128), feat};
    const int strides[5] = {4, 4, 4, 5, 1};
    const int kernels[5] = {8, 8, 8, 10, 3};
    int ci = 1;
    for (int l = 0; l < 5; ++l) {
      ConvBlock b;
      b.stride = strides[l];
      b.kernel = kernels[l];
      b.w = Param("det.conv" + std::to_string(l) + ".w",
                  init_conv_fanin({chans[l], ci, kernels[l]}, r));
      b.b = Param("det.conv" + std::to_string(l) + ".b", Tensor::zeros({chans[l]}));
      b.gamma = Param("det.conv" + std::to_string(l) + ".gamma",
                      Tensor::full({chans[l]}, 1.0));
      b.beta = Param("det.conv" + std::to_string(l) + ".beta", Tensor::zeros({chans[l]}));
      blocks_.push_back(std::move(b));
      ci = chans[l];
    }
  }
  head_w_ = Param("det.head.w", Tensor::zeros({num_classes, feat}));
  head_b_ = Param("det.head.b", Tensor::zeros({num_classes}));
}

int64_t Detector::min_samples() const {
  return static_cast<int64_t>(0.025 * kCanonicalRate);  // 25 ms
}

Var Detector::features(Tape& t, const std::vector<double>& samples) {
  if (spec_.kind != FrontEndSpec::Kind::builtin_conv)
    throw std::logic_error("detector: differentiable features need the builtin front-end");
  if (static_cast<int64_t>(samples.size()) < min_samples())
    throw std::invalid_argument("detector: clip shorter than 25 ms");
  Var h = t.constant(Tensor({1, static_cast<int64_t>(samples.size())}, samples));
  return features_from(t, h);
}

Var Detector::features_var(Tape& t, Var h) {
  if (spec_.kind != FrontEndSpec::Kind::builtin_conv)
    throw std::logic_error("detector: differentiable features need the builtin front-end");
  return features_from(t, h);
}

Var Detector::features_from(Tape& t, Var h) {
  for (auto& b : blocks_) {
    const int64_t pad_total = b.kernel - b.stride;
    const int64_t pl = pad_total / 2, pr = pad_total - pad_total / 2;
    h = conv1d(t, h, leaf(t, b.w), leaf(t, b.b), b.stride, pl, pr);
    h = instance_norm(t, h, leaf(t, b.gamma), leaf(t, b.beta));
    h = elu(t, h);
  }
  return h;
}

Tensor Detector::features_external(const AudioClip& clip) const {
  if (spec_.kind != FrontEndSpec::Kind::external_ssl_adapter)
    throw std::logic_error("detector: external features need the adapter front-end");
  if (spec_.adapter_command.empty())
    throw std::runtime_error("detector: external front-end has no adapter command");
  auto wav = encode_wav(clip);
  ProcessResult res = run_process(spec_.adapter_command, wav);
  if (!res.ok())
    throw std::runtime_error("detector: adapter exited with code " +
                             std::to_string(res.exit_code));
  if (res.out.size() < 8) throw std::runtime_error("detector: adapter output too short");
  int32_t frames = 0, dim = 0;
  std::memcpy(&frames, res.out.data(), 4);
  std::memcpy(&dim, res.out.data() + 4, 4);
  if (frames < 1 || dim < 1 ||
      res.out.size() < 8 + static_cast<size_t>(frames) * static_cast<size_t>(dim) * 4)
    throw std::runtime_error("detector: adapter output malformed");
  if (dim != spec_.feature_dim)
    throw std::runtime_error("detector: adapter dim " + std::to_string(dim) +
                             " != spec " + std::to_string(spec_.feature_dim));
  Tensor out({dim, frames});
  const uint8_t* p = res.out.data() + 8;
  for (int32_t f = 0; f < frames; ++f)
    for (int32_t d = 0; d < dim; ++d) {
      float v;
      std::memcpy(&v, p + (static_cast<size_t>(f) * dim + d) * 4, 4);
      if (!std::isfinite(v)) v = 0;
      out.at(d, f) = static_cast<double>(v);
    }
  return out;
}

Var Detector::logits_from_features(Tape& t, Var feats) {
  if (feats->val.rank() != 2 || feats->val.dim(1) < 1)
    throw std::invalid_argument("detector: empty feature sequence");
  Var pooled = mean_cols(t, feats);  // global average pooling over time
  return linear(t, pooled, leaf(t, head_w_), leaf(t, head_b_));
}

Var Detector::logits(Tape& t, const std::vector<double>& samples) {
  return logits_from_features(t, features(t, samples));
}

ClassProbabilities softmax_probabilities(const std::vector<double>& logits) {
  ClassProbabilities out;
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0;
  for (double v : logits) z += std::exp(v - mx);
  out.p.reserve(logits.size());
  for (double v : logits) out.p.push_back(std::exp(v - mx) / z);
  return out;
}

ClassProbabilities Detector::classify_features(const Tensor& feats) {
  Tape t;
  Var f = t.constant(feats);
  Var lg = logits_from_features(t, f);
  return softmax_probabilities(lg->val.vec());
}

ClassProbabilities Detector::classify(const AudioClip& clip) {
  if (spec_.kind == FrontEndSpec::Kind::external_ssl_adapter)
    return classify_features(features_external(clip));
  Tape t;
  Var lg = logits(t, clip.samples);
  return softmax_probabilities(lg->val.vec());
}

std::vector<Param*> Detector::params() {
  std::vector<Param*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.w);
    out.push_back(&b.b);
    out.push_back(&b.gamma);
    out.push_back(&b.beta);
  }
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

int decode_argmax(const ClassProbabilities& p) {
  if (p.p.empty()) throw std::invalid_argument("decode_argmax: empty probabilities");
  int best = 0;
  for (size_t i = 1; i < p.p.size(); ++i)
    if (p.p[i] > p.p[static_cast<size_t>(best)]) best = static_cast<int>(i);
  return best;
}

int decode_hamming(const std::vector<int>& bits, const SystemRegistry& registry) {
  if (static_cast<int>(bits.size()) != registry.bits_len)
    throw std::invalid_argument("decode_hamming: bit length mismatch");
  int best = -1, best_d = 1 << 30;
  for (int c = 0; c < registry.num_classes; ++c) {
    const auto code = registry.class_bits(c);
    int d = 0;
    for (size_t i = 0; i < bits.size(); ++i) d += bits[i] != code[i];
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace fakemark
