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

#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "core/gemm.hpp"

namespace fakemark {

bool Tensor::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace {

void check_binary_shapes(const Var a, const Var b) {
  if (!a->val.same_shape(b->val) && a->val.numel() != 1 && b->val.numel() != 1)
    throw std::invalid_argument("elementwise op: shape mismatch");
}

// Accumulate src into dst; src may be broadcast from a scalar.
void axpy_broadcast(Tensor& dst, const Tensor& src_grad, bool src_is_scalar, double sign) {
  if (src_is_scalar) {
    double s = 0;
    for (int64_t i = 0; i < src_grad.numel(); ++i) s += src_grad[i];
    dst[0] += sign * s;
  } else {
    for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += sign * src_grad[i];
  }
}

double bval(const Var v, int64_t i) { return v->val.numel() == 1 ? v->val[0] : v->val[i]; }

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_binary_shapes(a, b);
  const Var big = a->val.numel() >= b->val.numel() ? a : b;
  Tensor out(big->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = bval(a, i) + bval(b, i);
  Var o = t.make(std::move(out), a->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [a, b, o] {
      if (a->needs_grad) axpy_broadcast(a->g(), o->grad, a->val.numel() == 1 && o->grad.numel() != 1, 1.0);
      if (b->needs_grad) axpy_broadcast(b->g(), o->grad, b->val.numel() == 1 && o->grad.numel() != 1, 1.0);
    };
  return o;
}

Var sub(Tape& t, Var a, Var b) {
  check_binary_shapes(a, b);
  const Var big = a->val.numel() >= b->val.numel() ? a : b;
  Tensor out(big->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = bval(a, i) - bval(b, i);
  Var o = t.make(std::move(out), a->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [a, b, o] {
      if (a->needs_grad) axpy_broadcast(a->g(), o->grad, a->val.numel() == 1 && o->grad.numel() != 1, 1.0);
      if (b->needs_grad) axpy_broadcast(b->g(), o->grad, b->val.numel() == 1 && o->grad.numel() != 1, -1.0);
    };
  return o;
}

Var mul(Tape& t, Var a, Var b) {
  check_binary_shapes(a, b);
  const Var big = a->val.numel() >= b->val.numel() ? a : b;
  Tensor out(big->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = bval(a, i) * bval(b, i);
  Var o = t.make(std::move(out), a->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [a, b, o] {
      const int64_t n = o->grad.numel();
      if (a->needs_grad) {
        Tensor& ga = a->g();
        if (a->val.numel() == 1 && n != 1) {
          double s = 0;
          for (int64_t i = 0; i < n; ++i) s += o->grad[i] * bval(b, i);
          ga[0] += s;
        } else {
          for (int64_t i = 0; i < n; ++i) ga[i] += o->grad[i] * bval(b, i);
        }
      }
      if (b->needs_grad) {
        Tensor& gb = b->g();
        if (b->val.numel() == 1 && n != 1) {
          double s = 0;
          for (int64_t i = 0; i < n; ++i) s += o->grad[i] * bval(a, i);
          gb[0] += s;
        } else {
          for (int64_t i = 0; i < n; ++i) gb[i] += o->grad[i] * bval(a, i);
        }
      }
    };
  return o;
}

Var vdiv(Tape& t, Var a, Var b) {
  check_binary_shapes(a, b);
  const Var big = a->val.numel() >= b->val.numel() ? a : b;
  Tensor out(big->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = bval(a, i) / bval(b, i);
  Var o = t.make(std::move(out), a->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [a, b, o] {
      const int64_t n = o->grad.numel();
      if (a->needs_grad) {
        Tensor& ga = a->g();
        if (a->val.numel() == 1 && n != 1) {
          double s = 0;
          for (int64_t i = 0; i < n; ++i) s += o->grad[i] / bval(b, i);
          ga[0] += s;
        } else {
          for (int64_t i = 0; i < n; ++i) ga[i] += o->grad[i] / bval(b, i);
        }
      }
      if (b->needs_grad) {
        Tensor& gb = b->g();
        if (b->val.numel() == 1 && n != 1) {
          double s = 0;
          for (int64_t i = 0; i < n; ++i) {
            const double bb = bval(b, i);
            s += -o->grad[i] * bval(a, i) / (bb * bb);
          }
          gb[0] += s;
        } else {
          for (int64_t i = 0; i < n; ++i) {
            const double bb = bval(b, i);
            gb[i] += -o->grad[i] * bval(a, i) / (bb * bb);
          }
        }
      }
    };
  return o;
}

Var scale(Tape& t, Var a, double c) {
  Tensor out(a->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] * c;
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, c] {
      Tensor& ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += c * o->grad[i];
    };
  return o;
}

Var add_const(Tape& t, Var a, double c) {
  Tensor out(a->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] + c;
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o] {
      Tensor& ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += o->grad[i];
    };
  return o;
}

Var neg(Tape& t, Var a) { return scale(t, a, -1.0); }

namespace {

template <class F, class DF>
Var unary_op(Tape& t, Var a, F f, DF df) {
  Tensor out(a->val.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = f(a->val[i]);
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, df] {
      Tensor& ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += df(a->val[i], o->val[i]) * o->grad[i];
    };
  return o;
}

}  // namespace

Var vabs(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var square(Tape& t, Var a) {
  return unary_op(t, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var vsqrt(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / std::max(y, 1e-150); });
}

Var log_floor(Tape& t, Var a, double floor) {
  return unary_op(
      t, a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var relu(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

namespace {

// Deterministic fast exp: 2^k * P(r) with round-to-nearest range reduction
// and a degree-7 Taylor core (|rel err| < 6e-9). Used only inside hot
// activations; keeps bitwise reproducibility because it is a fixed scalar
// formula with no libm dispatch.
inline double fast_exp(double x) {
  if (x < -700.0) return 0.0;
  if (x > 700.0) x = 700.0;
  const double log2e = 1.4426950408889634074;
  const double z = x * log2e;
  const double zi = std::floor(z + 0.5);
  const double u = (z - zi) * 0.69314718055994530942;
  double p = 1.0 / 5040.0;
  p = p * u + 1.0 / 720.0;
  p = p * u + 1.0 / 120.0;
  p = p * u + 1.0 / 24.0;
  p = p * u + 1.0 / 6.0;
  p = p * u + 0.5;
  p = p * u + 1.0;
  p = p * u + 1.0;
  const int64_t e = static_cast<int64_t>(zi);
  uint64_t bits;
  std::memcpy(&bits, &p, 8);
  const int64_t expo = static_cast<int64_t>((bits >> 52) & 0x7ff) + e;
  if (expo <= 0) return 0.0;
  if (expo >= 0x7ff) return 1e308;
  bits = (bits & ~(0x7ffull << 52)) | (static_cast<uint64_t>(expo) << 52);
  std::memcpy(&p, &bits, 8);
  return p;
}

}  // namespace

Var softplus(Tape& t, Var a) {
  return unary_op(
      t, a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(std::max(x, -700.0))); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-std::clamp(x, -700.0, 700.0))); });
}

Var elu(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return x > 0 ? x : fast_exp(x) - 1.0; },
      [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Var leaky_relu(Tape& t, Var a, double slope) {
  return unary_op(
      t, a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var vtanh(Tape& t, Var a) {
  return unary_op(t, a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return 1.0 / (1.0 + std::exp(-std::clamp(x, -700.0, 700.0))); },
      [](double, double y) { return y * (1.0 - y); });
}

Var sum(Tape& t, Var a) {
  double s = 0;
  for (int64_t i = 0; i < a->val.numel(); ++i) s += a->val[i];
  Var o = t.make(Tensor::scalar(s), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o] {
      Tensor& ga = a->g();
      const double g = o->grad[0];
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    };
  return o;
}

Var mean(Tape& t, Var a) { return scale(t, sum(t, a), 1.0 / static_cast<double>(a->val.numel())); }

Var mean_abs(Tape& t, Var a) { return mean(t, vabs(t, a)); }

Var mean_sq(Tape& t, Var a) { return mean(t, square(t, a)); }

Var sum_sq(Tape& t, Var a) { return sum(t, square(t, a)); }

Var reshape(Tape& t, Var a, std::vector<int64_t> dims) {
  if (Tensor::count(dims) != a->val.numel()) throw std::invalid_argument("reshape: numel mismatch");
  Tensor out(std::move(dims), a->val.vec());
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o] {
      Tensor& ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += o->grad[i];
    };
  return o;
}

Var slice_cols(Tape& t, Var a, int64_t c0, int64_t c1) {
  if (a->val.rank() != 2) throw std::invalid_argument("slice_cols: rank-2 expected");
  const int64_t rows = a->val.dim(0), cols = a->val.dim(1);
  if (c0 < 0 || c1 > cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  Tensor out({rows, c1 - c0});
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = c0; c < c1; ++c) out.at(r, c - c0) = a->val.at(r, c);
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, c0] {
      Tensor& ga = a->g();
      const int64_t rows = o->grad.dim(0), w = o->grad.dim(1);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < w; ++c) ga.at(r, c0 + c) += o->grad.at(r, c);
    };
  return o;
}

Var slice1d(Tape& t, Var a, int64_t i0, int64_t i1) {
  if (a->val.rank() != 1) throw std::invalid_argument("slice1d: rank-1 expected");
  if (i0 < 0 || i1 > a->val.dim(0) || i0 >= i1) throw std::invalid_argument("slice1d: bad range");
  Tensor out({i1 - i0});
  for (int64_t i = i0; i < i1; ++i) out[i - i0] = a->val[i];
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, i0] {
      Tensor& ga = a->g();
      for (int64_t i = 0; i < o->grad.numel(); ++i) ga[i0 + i] += o->grad[i];
    };
  return o;
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  const int64_t cols = parts[0]->val.dim(1);
  int64_t rows = 0;
  bool needs = false;
  for (Var p : parts) {
    if (p->val.rank() != 2 || p->val.dim(1) != cols)
      throw std::invalid_argument("concat_rows: shape mismatch");
    rows += p->val.dim(0);
    needs = needs || p->needs_grad;
  }
  Tensor out({rows, cols});
  int64_t r0 = 0;
  for (Var p : parts) {
    std::copy(p->val.data(), p->val.data() + p->val.numel(), out.data() + r0 * cols);
    r0 += p->val.dim(0);
  }
  Var o = t.make(std::move(out), needs);
  if (o->needs_grad) {
    std::vector<Var> ps = parts;
    o->back = [ps, o, cols] {
      int64_t r0 = 0;
      for (Var p : ps) {
        if (p->needs_grad) {
          Tensor& gp = p->g();
          const double* src = o->grad.data() + r0 * cols;
          for (int64_t i = 0; i < gp.numel(); ++i) gp[i] += src[i];
        }
        r0 += p->val.dim(0);
      }
    };
  }
  return o;
}

namespace {

// Shared pad logic for rank-1 [T] and rank-2 [C,T] tensors along time.
struct PadShape {
  int64_t ch, tin, tout;
};
PadShape pad_shape(const Tensor& x, int64_t left, int64_t right) {
  if (x.rank() == 1) return {1, x.dim(0), x.dim(0) + left + right};
  if (x.rank() == 2) return {x.dim(0), x.dim(1), x.dim(1) + left + right};
  throw std::invalid_argument("pad: rank-1 or rank-2 expected");
}

}  // namespace

Var pad1d(Tape& t, Var a, int64_t left, int64_t right) {
  const PadShape s = pad_shape(a->val, left, right);
  Tensor out(a->val.rank() == 1 ? std::vector<int64_t>{s.tout}
                                : std::vector<int64_t>{s.ch, s.tout});
  for (int64_t c = 0; c < s.ch; ++c)
    for (int64_t i = 0; i < s.tin; ++i) out[c * s.tout + left + i] = a->val[c * s.tin + i];
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, left, s] {
      Tensor& ga = a->g();
      for (int64_t c = 0; c < s.ch; ++c)
        for (int64_t i = 0; i < s.tin; ++i) ga[c * s.tin + i] += o->grad[c * s.tout + left + i];
    };
  return o;
}

Var pad_reflect1d(Tape& t, Var a, int64_t left, int64_t right) {
  const PadShape s = pad_shape(a->val, left, right);
  if (left >= s.tin || right >= s.tin)
    throw std::invalid_argument("pad_reflect1d: pad exceeds length-1");
  auto src_index = [left, tin = s.tin](int64_t i) {  // index into [0, tin)
    int64_t k = i - left;
    if (k < 0) k = -k;
    if (k >= tin) k = 2 * (tin - 1) - k;
    return k;
  };
  Tensor out(a->val.rank() == 1 ? std::vector<int64_t>{s.tout}
                                : std::vector<int64_t>{s.ch, s.tout});
  for (int64_t c = 0; c < s.ch; ++c)
    for (int64_t i = 0; i < s.tout; ++i) out[c * s.tout + i] = a->val[c * s.tin + src_index(i)];
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, left, s, src_index] {
      Tensor& ga = a->g();
      for (int64_t c = 0; c < s.ch; ++c)
        for (int64_t i = 0; i < s.tout; ++i)
          ga[c * s.tin + src_index(i)] += o->grad[c * s.tout + i];
    };
  return o;
}

Var matmul(Tape& t, Var a, Var b) {
  if (a->val.rank() != 2 || b->val.rank() != 2 || a->val.dim(1) != b->val.dim(0))
    throw std::invalid_argument("matmul: shape mismatch");
  const int64_t m = a->val.dim(0), k = a->val.dim(1), n = b->val.dim(1);
  Tensor out({m, n});
  gemm_rm(a->val.data(), b->val.data(), out.data(), m, k, n, false);
  Var o = t.make(std::move(out), a->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [a, b, o, m, k, n] {
      if (a->needs_grad)
        gemm_a_bt(o->grad.data(), b->val.data(), a->g().data(), m, n, k, true);
      if (b->needs_grad)
        gemm_at_b(a->val.data(), o->grad.data(), b->g().data(), k, m, n, true);
    };
  return o;
}

Var linear(Tape& t, Var x, Var w, Var b) {
  if (x->val.rank() != 1 || w->val.rank() != 2 || w->val.dim(1) != x->val.dim(0))
    throw std::invalid_argument("linear: shape mismatch");
  const int64_t co = w->val.dim(0), ci = w->val.dim(1);
  if (b->val.numel() != co) throw std::invalid_argument("linear: bias mismatch");
  Tensor out({co});
  for (int64_t r = 0; r < co; ++r) {
    double s = b->val[r];
    const double* wr = w->val.data() + r * ci;
    for (int64_t c = 0; c < ci; ++c) s += wr[c] * x->val[c];
    out[r] = s;
  }
  Var o = t.make(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [x, w, b, o, co, ci] {
      for (int64_t r = 0; r < co; ++r) {
        const double g = o->grad[r];
        if (g == 0) continue;
        if (w->needs_grad) {
          double* gw = w->g().data() + r * ci;
          for (int64_t c = 0; c < ci; ++c) gw[c] += g * x->val[c];
        }
        if (x->needs_grad) {
          Tensor& gx = x->g();
          const double* wr = w->val.data() + r * ci;
          for (int64_t c = 0; c < ci; ++c) gx[c] += g * wr[c];
        }
        if (b->needs_grad) b->g()[r] += g;
      }
    };
  return o;
}

Var mean_cols(Tape& t, Var a) {
  if (a->val.rank() != 2) throw std::invalid_argument("mean_cols: rank-2 expected");
  const int64_t ch = a->val.dim(0), n = a->val.dim(1);
  Tensor out({ch});
  for (int64_t c = 0; c < ch; ++c) {
    double s = 0;
    const double* row = a->val.data() + c * n;
    for (int64_t i = 0; i < n; ++i) s += row[i];
    out[c] = s / static_cast<double>(n);
  }
  Var o = t.make(std::move(out), a->needs_grad);
  if (o->needs_grad)
    o->back = [a, o, ch, n] {
      Tensor& ga = a->g();
      for (int64_t c = 0; c < ch; ++c) {
        const double g = o->grad[c] / static_cast<double>(n);
        double* row = ga.data() + c * n;
        for (int64_t i = 0; i < n; ++i) row[i] += g;
      }
    };
  return o;
}

Var mul_rowvec(Tape& t, Var a, Var m) {
  if (a->val.rank() != 2 || m->val.rank() != 1 || a->val.dim(1) != m->val.dim(0))
    throw std::invalid_argument("mul_rowvec: shape mismatch");
  const int64_t ch = a->val.dim(0), n = a->val.dim(1);
  Tensor out({ch, n});
  for (int64_t c = 0; c < ch; ++c)
    for (int64_t i = 0; i < n; ++i) out.at(c, i) = a->val.at(c, i) * m->val[i];
  Var o = t.make(std::move(out), a->needs_grad || m->needs_grad);
  if (o->needs_grad)
    o->back = [a, m, o, ch, n] {
      if (a->needs_grad) {
        Tensor& ga = a->g();
        for (int64_t c = 0; c < ch; ++c)
          for (int64_t i = 0; i < n; ++i) ga.at(c, i) += o->grad.at(c, i) * m->val[i];
      }
      if (m->needs_grad) {
        Tensor& gm = m->g();
        for (int64_t c = 0; c < ch; ++c)
          for (int64_t i = 0; i < n; ++i) gm[i] += o->grad.at(c, i) * a->val.at(c, i);
      }
    };
  return o;
}

Var embedding_row(Tape& t, Var table, int64_t row) {
  if (table->val.rank() != 2) throw std::invalid_argument("embedding_row: rank-2 expected");
  if (row < 0 || row >= table->val.dim(0))
    throw std::out_of_range("embedding_row: index out of range");
  const int64_t h = table->val.dim(1);
  Tensor out({h});
  std::copy(table->val.data() + row * h, table->val.data() + (row + 1) * h, out.data());
  Var o = t.make(std::move(out), table->needs_grad);
  if (o->needs_grad)
    o->back = [table, o, row, h] {
      double* g = table->g().data() + row * h;
      for (int64_t i = 0; i < h; ++i) g[i] += o->grad[i];
    };
  return o;
}

Var repeat_col(Tape& t, Var v, int64_t n) {
  if (v->val.rank() != 1) throw std::invalid_argument("repeat_col: rank-1 expected");
  if (n < 1) throw std::invalid_argument("repeat_col: frames must be >= 1");
  const int64_t h = v->val.dim(0);
  Tensor out({h, n});
  for (int64_t r = 0; r < h; ++r)
    for (int64_t c = 0; c < n; ++c) out.at(r, c) = v->val[r];
  Var o = t.make(std::move(out), v->needs_grad);
  if (o->needs_grad)
    o->back = [v, o, h, n] {
      Tensor& gv = v->g();
      for (int64_t r = 0; r < h; ++r) {
        double s = 0;
        for (int64_t c = 0; c < n; ++c) s += o->grad.at(r, c);
        gv[r] += s;
      }
    };
  return o;
}

Var cross_entropy_logits(Tape& t, Var logits, int64_t label) {
  if (logits->val.rank() != 1) throw std::invalid_argument("cross_entropy: rank-1 logits");
  const int64_t c = logits->val.dim(0);
  if (label < 0 || label >= c) throw std::out_of_range("cross_entropy: label out of range");
  double mx = logits->val[0];
  for (int64_t i = 1; i < c; ++i) mx = std::max(mx, logits->val[i]);
  double z = 0;
  for (int64_t i = 0; i < c; ++i) z += std::exp(logits->val[i] - mx);
  const double lse = mx + std::log(z);
  const double cap = -std::log(kCeProbFloor);
  double loss = lse - logits->val[label];
  const bool capped = loss > cap;
  if (capped) loss = cap;
  Var o = t.make(Tensor::scalar(loss), logits->needs_grad);
  if (o->needs_grad)
    o->back = [logits, o, label, mx, lse, capped, c] {
      if (capped) return;  // probability floor reached; documented flat region
      Tensor& gl = logits->g();
      const double g = o->grad[0];
      for (int64_t i = 0; i < c; ++i) {
        const double p = std::exp(logits->val[i] - lse);
        gl[i] += g * (p - (i == label ? 1.0 : 0.0));
      }
      (void)mx;
    };
  return o;
}

}  // namespace fakemark
