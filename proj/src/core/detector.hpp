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

#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/corpus.hpp"
#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace fakemark {

// Front-end selection. The builtin convolutional stack is differentiable end
// to end; the external SSL adapter is a frozen feature extractor reached
// through a subprocess (WAV on stdin, '[frames][dim] f32' stream on stdout).
struct FrontEndSpec {
  enum class Kind { builtin_conv, external_ssl_adapter };
  Kind kind = Kind::builtin_conv;
  int feature_dim = 128;        // 1024 for the external adapter
  std::string adapter_command;  // external kind only
  double desk_scale = 1.0;

  int scaled_feature_dim() const {
    if (kind == Kind::external_ssl_adapter) return feature_dim;
    return std::max(4, static_cast<int>(std::lround(feature_dim * desk_scale)));
  }
};

struct ClassProbabilities {
  std::vector<double> p;
  void validate() const;  // entries in [0,1], sum within 1e-6 of 1
};

class Detector {
 public:
  Detector(const FrontEndSpec& spec, int num_classes, Rng& rng);

  // Builtin path: [feature_dim, frames], ~20 ms hop, differentiable.
  Var features(Tape& t, const std::vector<double>& samples);
  Var features_var(Tape& t, Var h);  // h [1,T], differentiable w.r.t. h

  // External path: frozen features from the adapter subprocess.
  Tensor features_external(const AudioClip& clip) const;

  // Mean-pool over frames + fully connected head -> logits [C].
  Var logits_from_features(Tape& t, Var feats);
  Var logits(Tape& t, const std::vector<double>& samples);  // builtin only

  ClassProbabilities classify(const AudioClip& clip);
  ClassProbabilities classify_features(const Tensor& feats);  // [dim, frames]

  std::vector<Param*> params();
  const FrontEndSpec& frontend() const { return spec_; }
  int num_classes() const { return num_classes_; }

  // Minimum samples for one output frame (25 ms contract).
  int64_t min_samples() const;

 private:
  Var features_from(Tape& t, Var h);  // h [1,T]

  FrontEndSpec spec_;
  int num_classes_;
  struct ConvBlock {
    Param w, b, gamma, beta;
    int stride, kernel;
  };
  std::vector<ConvBlock> blocks_;
  Param head_w_, head_b_;
};

ClassProbabilities softmax_probabilities(const std::vector<double>& logits);

// argmax with lowest-index tie breaking.
int decode_argmax(const ClassProbabilities& p);

// Nearest registered code by Hamming distance; ties -> lowest class id.
int decode_hamming(const std::vector<int>& bits, const SystemRegistry& registry);

}  // namespace fakemark
