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

#include <cstdint>

namespace fakemark {

// C (m x n) = A (m x k) * B (k x n), all row-major contiguous.
// Operands are staged into Eigen-owned (consistently aligned) storage so the
// same inputs always take the same kernel path: results are bitwise
// reproducible run to run, which the training determinism contract needs.
void gemm_rm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate);

// C += or = A^T * B with A (k x m), B (k x n) row-major.
void gemm_at_b(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool accumulate);

// C += or = A * B^T with A (m x k), B (n x k) row-major.
void gemm_a_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool accumulate);

}  // namespace fakemark
