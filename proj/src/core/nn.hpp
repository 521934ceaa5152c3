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

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace fakemark {

// Trainable parameter with Adam state. Parameters outlive tapes; leaf()
// wraps one into the current tape so gradients accumulate into `g`.
struct Param {
  std::string name;
  Tensor w;
  Tensor g;
  Tensor adam_m;
  Tensor adam_v;

  Param() = default;
  Param(std::string n, Tensor init) : name(std::move(n)), w(std::move(init)) {
    g = Tensor::zeros(w.dims());
    adam_m = Tensor::zeros(w.dims());
    adam_v = Tensor::zeros(w.dims());
  }
  void zero_grad() { std::fill(g.vec().begin(), g.vec().end(), 0.0); }
};

Var leaf(Tape& t, Param& p);

// Adam with default moment coefficients (0.9 / 0.999, eps 1e-8).
struct AdamOpt {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;

  void step(std::vector<Param*>& params, double lr);
};

double grad_norm(const std::vector<Param*>& params);

// ---- layers -----------------------------------------------------------------

// x [Ci,T], w [Co,Ci,K], b [Co]; explicit asymmetric zero padding.
Var conv1d(Tape& t, Var x, Var w, Var b, int64_t stride, int64_t pad_l, int64_t pad_r);

// Transposed convolution; x [Ci,T], w [Ci,Co,K], b [Co]. The full output of
// length (T-1)*stride + K is cropped by crop_l/crop_r.
Var conv1d_transpose(Tape& t, Var x, Var w, Var b, int64_t stride, int64_t crop_l,
                     int64_t crop_r);

// Unidirectional LSTM; x [Ci,T] -> h [H,T]. wx [4H,Ci], wh [4H,H], b [4H];
// gate order (i, f, g, o), zero initial state.
Var lstm(Tape& t, Var x, Var wx, Var wh, Var b);

// Per-channel normalization over time with affine parameters.
Var instance_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5);

Var avgpool1d(Tape& t, Var x, int64_t k);  // [C,T] -> [C,floor(T/k)]

// ---- differentiable spectra ----------------------------------------------------

// Centered magnitude STFT of x [T] -> [bins, frames] (Hann window).
Var stft_mag(Tape& t, Var x, int64_t nfft, int64_t hop);

// Overlap-add synthesis of mag [bins,frames] with a constant phase matrix.
// Linear in mag; phase is not differentiated.
Var istft_with_phase(Tape& t, Var mag, const Tensor& phase, int64_t nfft, int64_t hop,
                     int64_t out_len);

// Causal SOS filtering of x [T]; backward uses the exact adjoint
// (reverse - filter - reverse).
struct BiquadCoeffs {
  double b0, b1, b2, a1, a2;
};
Var iir_filter(Tape& t, Var x, const std::vector<BiquadCoeffs>& sos);

// ---- initializers ---------------------------------------------------------------

Tensor init_normal(std::vector<int64_t> dims, double stddev, Rng& rng);
Tensor init_conv_fanin(std::vector<int64_t> dims, Rng& rng);  // w [Co,Ci,K] or [Ci,Co,K]

}  // namespace fakemark
