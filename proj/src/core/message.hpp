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

#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace fakemark {

// Watermark message: a class index in {0..C-1}, not an arbitrary bitstring.
struct WatermarkMessage {
  int w = 0;
};

// Learnable C x H embedding table. Rows are initialized i.i.d. normal with
// stddev 1/sqrt(H) so the initial watermark latent is comparable in
// magnitude to carrier latents.
struct EmbeddingTable {
  Param table;  // [C, H]

  EmbeddingTable() = default;
  EmbeddingTable(int num_classes, int latent_dim, Rng& rng);

  int num_classes() const { return static_cast<int>(table.w.dim(0)); }
  int latent_dim() const { return static_cast<int>(table.w.dim(1)); }
};

// Row lookup, differentiable w.r.t. the table. Throws on out-of-range w.
Var embed(Tape& t, const WatermarkMessage& msg, Var table);

// Non-tape convenience for inference paths.
std::vector<double> embed_values(const WatermarkMessage& msg, const EmbeddingTable& table);

// Repeats e_w along time: [H] -> [H, frames].
Var repeat_time(Tape& t, Var e_w, int64_t frames);

}  // namespace fakemark
