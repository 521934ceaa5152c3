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

#include "core/gemm.hpp"

#include <malloc.h>

#include <Eigen/Dense>

namespace fakemark {

namespace {
// Tape passes allocate and free many multi-megabyte buffers per clip. With
// glibc defaults those round-trip through mmap/munmap and every reuse
// page-faults; keeping them on the heap roughly doubles GEMM throughput.
struct MallocTuning {
  MallocTuning() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  }
} g_malloc_tuning;
}  // namespace

// Matrix-matrix products go through Eigen's gebp kernel, which packs both
// operands into aligned internal buffers; the accumulation order depends only
// on the problem size, so results are bitwise reproducible regardless of the
// callers' buffer addresses. Matrix-vector products (which skip packing and
// peel by pointer alignment) are avoided by keeping n, m >= 1 GEMM shapes and
// staging LSTM state in Eigen-owned vectors at the call sites.

namespace {
using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMapR = Eigen::Map<const MatR>;
using MMapR = Eigen::Map<MatR>;
}  // namespace

void gemm_rm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  CMapR A(a, m, k);
  CMapR B(b, k, n);
  MMapR C(c, m, n);
  if (m == 1 || n == 1) {  // gemv shape: stage into owned storage
    MatR Ao = A, Bo = B;
    MatR Co(m, n);
    Co.noalias() = Ao * Bo;
    if (accumulate)
      C += Co;
    else
      C = Co;
    return;
  }
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

void gemm_at_b(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool accumulate) {
  CMapR A(a, k, m);
  CMapR B(b, k, n);
  MMapR C(c, m, n);
  if (m == 1 || n == 1) {
    MatR Ao = A, Bo = B;
    MatR Co(m, n);
    Co.noalias() = Ao.transpose() * Bo;
    if (accumulate)
      C += Co;
    else
      C = Co;
    return;
  }
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

void gemm_a_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool accumulate) {
  CMapR A(a, m, k);
  CMapR B(b, n, k);
  MMapR C(c, m, n);
  if (m == 1 || n == 1) {
    MatR Ao = A, Bo = B;
    MatR Co(m, n);
    Co.noalias() = Ao * Bo.transpose();
    if (accumulate)
      C += Co;
    else
      C = Co;
    return;
  }
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace fakemark
