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
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fakemark {

// Dense row-major tensor of doubles. Double precision is deliberate: the
// test suite validates every differentiable path against central finite
// differences, which float32 cannot support at the required tolerances.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> dims) : dims_(std::move(dims)) {
    v_.assign(static_cast<size_t>(count(dims_)), 0.0);
  }
  Tensor(std::vector<int64_t> dims, std::vector<double> values)
      : dims_(std::move(dims)), v_(std::move(values)) {
    if (static_cast<int64_t>(v_.size()) != count(dims_))
      throw std::invalid_argument("tensor: value count does not match shape");
  }

  static Tensor zeros(std::vector<int64_t> dims) { return Tensor(std::move(dims)); }
  static Tensor full(std::vector<int64_t> dims, double value) {
    Tensor t(std::move(dims));
    for (auto& x : t.v_) x = value;
    return t;
  }
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  int64_t numel() const { return static_cast<int64_t>(v_.size()); }
  int rank() const { return static_cast<int>(dims_.size()); }
  int64_t dim(int i) const { return dims_.at(static_cast<size_t>(i)); }
  const std::vector<int64_t>& dims() const { return dims_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& vec() { return v_; }
  const std::vector<double>& vec() const { return v_; }

  double& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  double& at(int64_t i, int64_t j) { return v_[static_cast<size_t>(i * dims_[1] + j)]; }
  double at(int64_t i, int64_t j) const { return v_[static_cast<size_t>(i * dims_[1] + j)]; }
  double& at(int64_t i, int64_t j, int64_t k) {
    return v_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return v_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }

  double item() const {
    if (numel() != 1) throw std::logic_error("tensor: item() on non-scalar");
    return v_[0];
  }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }
  bool all_finite() const;

  static int64_t count(const std::vector<int64_t>& dims) {
    int64_t n = 1;
    for (int64_t d : dims) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int64_t> dims_;
  std::vector<double> v_;
};

// Reverse-mode autodiff node. Nodes are owned by a Tape and identified by
// raw pointers; the tape is created per forward pass and dropped afterwards.
struct Node {
  Tensor val;
  Tensor grad;  // allocated lazily by g()
  bool needs_grad = false;
  bool grad_ready = false;
  std::function<void()> back;  // pushes this->grad into parents' grads

  Tensor& g() {
    if (!grad_ready) {
      grad = Tensor::zeros(val.dims());
      grad_ready = true;
    }
    return grad;
  }
};

using Var = Node*;

class Tape {
 public:
  Var make(Tensor val, bool needs_grad = true) {
    nodes_.push_back(std::make_unique<Node>());
    Node* n = nodes_.back().get();
    n->val = std::move(val);
    n->needs_grad = needs_grad;
    return n;
  }
  Var constant(Tensor val) { return make(std::move(val), false); }
  Var constant(double v) { return make(Tensor::scalar(v), false); }

  // Backpropagate from a scalar root. Nodes were created in topological
  // order, so a reverse sweep over the tape is a valid schedule.
  void backward(Var root) {
    if (root->val.numel() != 1) throw std::logic_error("backward: root must be scalar");
    root->g()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node* n = it->get();
      if (n->grad_ready && n->back) n->back();
    }
  }

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

// ---- elementwise / reduction ops -------------------------------------------
// Binary ops broadcast only when one operand is a scalar (numel == 1).

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var vdiv(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var add_const(Tape& t, Var a, double c);
Var neg(Tape& t, Var a);

Var vabs(Tape& t, Var a);
Var square(Tape& t, Var a);
Var vsqrt(Tape& t, Var a);           // sqrt(max(x, 0) + tiny guard in grad)
Var log_floor(Tape& t, Var a, double floor);  // log(max(x, floor))
Var relu(Tape& t, Var a);            // max(x, 0)
Var softplus(Tape& t, Var a);        // log(1 + e^x), numerically stable
Var elu(Tape& t, Var a);
Var leaky_relu(Tape& t, Var a, double slope);
Var vtanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);

Var sum(Tape& t, Var a);       // -> scalar
Var mean(Tape& t, Var a);      // -> scalar
Var mean_abs(Tape& t, Var a);  // -> scalar
Var mean_sq(Tape& t, Var a);   // -> scalar
Var sum_sq(Tape& t, Var a);    // -> scalar

// ---- shape ops --------------------------------------------------------------

Var reshape(Tape& t, Var a, std::vector<int64_t> dims);
Var slice_cols(Tape& t, Var a, int64_t c0, int64_t c1);    // [R,C] -> [R,c1-c0]
Var slice1d(Tape& t, Var a, int64_t i0, int64_t i1);       // [T] -> [i1-i0]
Var concat_rows(Tape& t, const std::vector<Var>& parts);   // [Ri,C] -> [sum Ri, C]
Var pad1d(Tape& t, Var a, int64_t left, int64_t right);    // zero pad, [T] or [C,T]
Var pad_reflect1d(Tape& t, Var a, int64_t left, int64_t right);  // [T] or [C,T]

// ---- linear algebra ----------------------------------------------------------

Var matmul(Tape& t, Var a, Var b);              // [M,K] x [K,N] -> [M,N]
Var linear(Tape& t, Var x, Var w, Var b);       // [Ci] with w [Co,Ci], b [Co]
Var mean_cols(Tape& t, Var a);                  // [C,T] -> [C]
Var mul_rowvec(Tape& t, Var a, Var m);          // [C,T] * broadcast [T]
Var embedding_row(Tape& t, Var table, int64_t row);  // [C,H] -> [H]
Var repeat_col(Tape& t, Var v, int64_t n);      // [H] -> [H,n], every column = v

// ---- losses ------------------------------------------------------------------

// Stable cross-entropy on logits: -log(softmax(logits)[label]) with the
// documented 1e-12 probability floor.
Var cross_entropy_logits(Tape& t, Var logits, int64_t label);

constexpr double kCeProbFloor = 1e-12;

}  // namespace fakemark
