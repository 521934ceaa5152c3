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

#include "core/message.hpp"

#include <cmath>
#include <stdexcept>

namespace fakemark {

EmbeddingTable::EmbeddingTable(int num_classes, int latent_dim, Rng& rng) {
  if (num_classes < 1 || latent_dim < 1)
    throw std::invalid_argument("embedding table: bad shape");
  table = Param("message.table",
                init_normal({num_classes, latent_dim},
                            1.0 / std::sqrt(static_cast<double>(latent_dim)), rng));
}

Var embed(Tape& t, const WatermarkMessage& msg, Var table) {
  if (msg.w < 0 || msg.w >= table->val.dim(0))
    throw std::out_of_range("embed: message " + std::to_string(msg.w) +
                            " out of range for C=" + std::to_string(table->val.dim(0)));
  return embedding_row(t, table, msg.w);
}

std::vector<double> embed_values(const WatermarkMessage& msg, const EmbeddingTable& table) {
  if (msg.w < 0 || msg.w >= table.num_classes())
    throw std::out_of_range("embed: message out of range");
  const int64_t h = table.latent_dim();
  std::vector<double> out(static_cast<size_t>(h));
  const double* row = table.table.w.data() + msg.w * h;
  std::copy(row, row + h, out.begin());
  return out;
}

Var repeat_time(Tape& t, Var e_w, int64_t frames) {
  if (frames < 1) throw std::invalid_argument("repeat_time: frames must be >= 1");
  return repeat_col(t, e_w, frames);
}

}  // namespace fakemark
