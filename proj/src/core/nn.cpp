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

#include "core/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/dsp.hpp"
#include "core/gemm.hpp"

namespace fakemark {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMapR = Eigen::Map<const EMat>;

Var leaf(Tape& t, Param& p) {
  Var v = t.make(p.w, true);
  Param* pp = &p;
  v->back = [v, pp] {
    double* g = pp->g.data();
    for (int64_t i = 0; i < v->grad.numel(); ++i) g[i] += v->grad[i];
  };
  return v;
}

void AdamOpt::step(std::vector<Param*>& params, double lr) {
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (Param* p : params) {
    double* w = p->w.data();
    double* g = p->g.data();
    double* m = p->adam_m.data();
    double* v = p->adam_v.data();
    const int64_t n = p->w.numel();
    for (int64_t i = 0; i < n; ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

double grad_norm(const std::vector<Param*>& params) {
  double s = 0;
  for (const Param* p : params)
    for (int64_t i = 0; i < p->g.numel(); ++i) s += p->g[i] * p->g[i];
  return std::sqrt(s);
}

namespace {

// im2col: x [Ci,T] (+ zero pad) -> col [Ci*K, Tout]
void im2col(const Tensor& x, int64_t k, int64_t stride, int64_t pad_l, int64_t t_out,
            std::vector<double>& col) {
  const int64_t ci = x.dim(0), tin = x.dim(1);
  col.assign(static_cast<size_t>(ci * k * t_out), 0.0);
  for (int64_t c = 0; c < ci; ++c) {
    const double* xr = x.data() + c * tin;
    for (int64_t kk = 0; kk < k; ++kk) {
      double* row = col.data() + (c * k + kk) * t_out;
      for (int64_t o = 0; o < t_out; ++o) {
        const int64_t idx = o * stride + kk - pad_l;
        if (idx >= 0 && idx < tin) row[o] = xr[idx];
      }
    }
  }
}

void col2im_accum(const std::vector<double>& col, int64_t ci, int64_t k, int64_t stride,
                  int64_t pad_l, int64_t t_out, Tensor& gx) {
  const int64_t tin = gx.dim(1);
  for (int64_t c = 0; c < ci; ++c) {
    double* gr = gx.data() + c * tin;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double* row = col.data() + (c * k + kk) * t_out;
      for (int64_t o = 0; o < t_out; ++o) {
        const int64_t idx = o * stride + kk - pad_l;
        if (idx >= 0 && idx < tin) gr[idx] += row[o];
      }
    }
  }
}

}  // namespace

Var conv1d(Tape& t, Var x, Var w, Var b, int64_t stride, int64_t pad_l, int64_t pad_r) {
  if (x->val.rank() != 2 || w->val.rank() != 3) throw std::invalid_argument("conv1d: bad ranks");
  const int64_t ci = x->val.dim(0), tin = x->val.dim(1);
  const int64_t co = w->val.dim(0), k = w->val.dim(2);
  if (w->val.dim(1) != ci) throw std::invalid_argument("conv1d: channel mismatch");
  if (b->val.numel() != co) throw std::invalid_argument("conv1d: bias mismatch");
  const int64_t t_out = (tin + pad_l + pad_r - k) / stride + 1;
  if (t_out < 1) throw std::invalid_argument("conv1d: input too short");

  auto col = std::make_shared<std::vector<double>>();
  im2col(x->val, k, stride, pad_l, t_out, *col);
  Tensor out({co, t_out});
  gemm_rm(w->val.data(), col->data(), out.data(), co, ci * k, t_out, false);
  for (int64_t r = 0; r < co; ++r) {
    double* row = out.data() + r * t_out;
    const double bias = b->val[r];
    for (int64_t i = 0; i < t_out; ++i) row[i] += bias;
  }
  Var o = t.make(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [x, w, b, o, col, ci, co, k, stride, pad_l, t_out] {
      const double* g = o->grad.data();
      if (b->needs_grad) {
        Tensor& gb = b->g();
        for (int64_t r = 0; r < co; ++r) {
          double s = 0;
          for (int64_t i = 0; i < t_out; ++i) s += g[r * t_out + i];
          gb[r] += s;
        }
      }
      if (w->needs_grad)
        gemm_a_bt(g, col->data(), w->g().data(), co, t_out, ci * k, true);
      if (x->needs_grad) {
        std::vector<double> gcol(static_cast<size_t>(ci * k * t_out));
        gemm_at_b(w->val.data(), g, gcol.data(), ci * k, co, t_out, false);
        col2im_accum(gcol, ci, k, stride, pad_l, t_out, x->g());
      }
    };
  return o;
}

Var conv1d_transpose(Tape& t, Var x, Var w, Var b, int64_t stride, int64_t crop_l,
                     int64_t crop_r) {
  if (x->val.rank() != 2 || w->val.rank() != 3)
    throw std::invalid_argument("conv1d_transpose: bad ranks");
  const int64_t ci = x->val.dim(0), tin = x->val.dim(1);
  const int64_t co = w->val.dim(1), k = w->val.dim(2);
  if (w->val.dim(0) != ci) throw std::invalid_argument("conv1d_transpose: channel mismatch");
  if (b->val.numel() != co) throw std::invalid_argument("conv1d_transpose: bias mismatch");
  const int64_t t_full = (tin - 1) * stride + k;
  const int64_t t_out = t_full - crop_l - crop_r;
  if (t_out < 1) throw std::invalid_argument("conv1d_transpose: crop too large");

  // Scatter formulation: out[co][o*stride + kk] += w[ci][co][kk] * x[ci][o].
  // Implemented as GEMM: cols [Co*K, T] = W^T * X, then col2im-style add.
  Tensor out({co, t_out});
  {
    std::vector<double> cols(static_cast<size_t>(co * k * tin));
    gemm_at_b(w->val.data(), x->val.data(), cols.data(), co * k, ci, tin, false);
    double* od = out.data();
    for (int64_t c = 0; c < co; ++c) {
      for (int64_t i = 0; i < t_out; ++i) od[c * t_out + i] = b->val[c];
      for (int64_t kk = 0; kk < k; ++kk) {
        const double* row = cols.data() + (c * k + kk) * tin;
        for (int64_t o = 0; o < tin; ++o) {
          const int64_t idx = o * stride + kk - crop_l;
          if (idx >= 0 && idx < t_out) od[c * t_out + idx] += row[o];
        }
      }
    }
  }
  Var o = t.make(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [x, w, b, o, ci, co, k, stride, crop_l, tin, t_out] {
      // gather grad back into the col layout
      std::vector<double> gcols(static_cast<size_t>(co * k * tin), 0.0);
      const double* gd = o->grad.data();
      for (int64_t c = 0; c < co; ++c)
        for (int64_t kk = 0; kk < k; ++kk) {
          double* row = gcols.data() + (c * k + kk) * tin;
          for (int64_t oo = 0; oo < tin; ++oo) {
            const int64_t idx = oo * stride + kk - crop_l;
            if (idx >= 0 && idx < t_out) row[oo] = gd[c * t_out + idx];
          }
        }
      if (b->needs_grad) {
        Tensor& gb = b->g();
        for (int64_t c = 0; c < co; ++c) {
          double s = 0;
          for (int64_t i = 0; i < t_out; ++i) s += gd[c * t_out + i];
          gb[c] += s;
        }
      }
      if (w->needs_grad)
        gemm_a_bt(x->val.data(), gcols.data(), w->g().data(), ci, tin, co * k, true);
      if (x->needs_grad)
        gemm_rm(w->val.data(), gcols.data(), x->g().data(), ci, co * k, tin, true);
    };
  return o;
}

Var lstm(Tape& t, Var x, Var wx, Var wh, Var b) {
  if (x->val.rank() != 2) throw std::invalid_argument("lstm: x rank-2 expected");
  const int64_t ci = x->val.dim(0), tn = x->val.dim(1);
  const int64_t h4 = wx->val.dim(0);
  const int64_t hh = h4 / 4;
  if (wx->val.dim(1) != ci || wh->val.dim(0) != h4 || wh->val.dim(1) != hh ||
      b->val.numel() != h4 || h4 % 4 != 0)
    throw std::invalid_argument("lstm: shape mismatch");

  // saved activations for BPTT
  auto gates = std::make_shared<Tensor>(Tensor({tn, h4}));  // post-nonlinearity (i,f,g,o)
  auto cells = std::make_shared<Tensor>(Tensor({tn, hh}));  // c_t
  Tensor hs({hh, tn});

  {
    // Input projections for the whole sequence in one GEMM: [4H,Ci] x [Ci,T].
    std::vector<double> zin(static_cast<size_t>(h4 * tn));
    gemm_rm(wx->val.data(), x->val.data(), zin.data(), h4, ci, tn, false);

    // recurrent weights staged once into aligned Eigen storage
    EMat WH = CMapR(wh->val.data(), h4, hh);
    Eigen::VectorXd hp = Eigen::VectorXd::Zero(hh);
    Eigen::VectorXd zv(h4);
    std::vector<double> cprev(static_cast<size_t>(hh), 0.0);
    std::vector<double> zt(static_cast<size_t>(h4));
    for (int64_t step = 0; step < tn; ++step) {
      zv.noalias() = WH * hp;
      for (int64_t j = 0; j < h4; ++j)
        zt[static_cast<size_t>(j)] = zv(j) + zin[static_cast<size_t>(j * tn + step)] + b->val[j];
      double* gt = gates->data() + step * h4;
      double* ct = cells->data() + step * hh;
      for (int64_t j = 0; j < hh; ++j) {
        const double zi = zt[static_cast<size_t>(j)];
        const double zf = zt[static_cast<size_t>(hh + j)];
        const double zg = zt[static_cast<size_t>(2 * hh + j)];
        const double zo = zt[static_cast<size_t>(3 * hh + j)];
        const double ig = 1.0 / (1.0 + std::exp(-zi));
        const double fg = 1.0 / (1.0 + std::exp(-zf));
        const double gg = std::tanh(zg);
        const double og = 1.0 / (1.0 + std::exp(-zo));
        const double c = fg * cprev[static_cast<size_t>(j)] + ig * gg;
        const double hv = og * std::tanh(c);
        gt[j] = ig;
        gt[hh + j] = fg;
        gt[2 * hh + j] = gg;
        gt[3 * hh + j] = og;
        ct[j] = c;
        hs.at(j, step) = hv;
        hp(j) = hv;
        cprev[static_cast<size_t>(j)] = c;
      }
    }
  }

  Var o = t.make(std::move(hs),
                 x->needs_grad || wx->needs_grad || wh->needs_grad || b->needs_grad);
  if (o->needs_grad)
    o->back = [x, wx, wh, b, o, gates, cells, ci, tn, hh, h4] {
      Eigen::VectorXd dh = Eigen::VectorXd::Zero(hh);
      Eigen::VectorXd dzv(h4);
      std::vector<double> dc(static_cast<size_t>(hh), 0.0);
      std::vector<double> dz(static_cast<size_t>(h4));
      Tensor dzin({h4, tn});  // gradient of pre-activation input projections
      EMat WH = CMapR(wh->val.data(), h4, hh);
      for (int64_t step = tn - 1; step >= 0; --step) {
        const double* gt = gates->data() + step * h4;
        const double* ct = cells->data() + step * hh;
        const double* cprev = step > 0 ? cells->data() + (step - 1) * hh : nullptr;
        for (int64_t j = 0; j < hh; ++j) {
          const double ig = gt[j], fg = gt[hh + j], gg = gt[2 * hh + j], og = gt[3 * hh + j];
          const double c = ct[j];
          const double tc = std::tanh(c);
          const double dht = dh(j) + o->grad.at(j, step);
          const double dct = dc[static_cast<size_t>(j)] + dht * og * (1 - tc * tc);
          const double cp = cprev ? cprev[j] : 0.0;
          dz[static_cast<size_t>(j)] = dct * gg * ig * (1 - ig);              // d z_i
          dz[static_cast<size_t>(hh + j)] = dct * cp * fg * (1 - fg);        // d z_f
          dz[static_cast<size_t>(2 * hh + j)] = dct * ig * (1 - gg * gg);    // d z_g
          dz[static_cast<size_t>(3 * hh + j)] = dht * tc * og * (1 - og);    // d z_o
          dc[static_cast<size_t>(j)] = dct * fg;
        }
        for (int64_t jj = 0; jj < h4; ++jj) {
          dzin.at(jj, step) = dz[static_cast<size_t>(jj)];
          dzv(jj) = dz[static_cast<size_t>(jj)];
        }
        // dh_{t-1} = WH^T dz
        dh.noalias() = WH.transpose() * dzv;
        if (wh->needs_grad && step > 0) {
          // outer product: no reduction, elementwise accumulate is exact
          double* gwh = wh->g().data();
          for (int64_t jj = 0; jj < h4; ++jj) {
            const double d = dz[static_cast<size_t>(jj)];
            if (d == 0) continue;
            for (int64_t j = 0; j < hh; ++j) gwh[jj * hh + j] += d * o->val.at(j, step - 1);
          }
        }
        if (b->needs_grad) {
          Tensor& gb = b->g();
          for (int64_t jj = 0; jj < h4; ++jj) gb[jj] += dz[static_cast<size_t>(jj)];
        }
      }
      if (wx->needs_grad)
        gemm_a_bt(dzin.data(), x->val.data(), wx->g().data(), h4, tn, ci, true);
      if (x->needs_grad)
        gemm_at_b(wx->val.data(), dzin.data(), x->g().data(), ci, h4, tn, true);
    };
  return o;
}

Var instance_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
  if (x->val.rank() != 2) throw std::invalid_argument("instance_norm: rank-2 expected");
  const int64_t ch = x->val.dim(0), n = x->val.dim(1);
  if (gamma->val.numel() != ch || beta->val.numel() != ch)
    throw std::invalid_argument("instance_norm: affine shape mismatch");
  auto mu = std::make_shared<std::vector<double>>(static_cast<size_t>(ch));
  auto inv = std::make_shared<std::vector<double>>(static_cast<size_t>(ch));
  Tensor out({ch, n});
  for (int64_t c = 0; c < ch; ++c) {
    const double* row = x->val.data() + c * n;
    double m = 0;
    for (int64_t i = 0; i < n; ++i) m += row[i];
    m /= static_cast<double>(n);
    double v = 0;
    for (int64_t i = 0; i < n; ++i) v += (row[i] - m) * (row[i] - m);
    v /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(v + eps);
    (*mu)[static_cast<size_t>(c)] = m;
    (*inv)[static_cast<size_t>(c)] = is;
    double* orow = out.data() + c * n;
    const double g = gamma->val[c], bb = beta->val[c];
    for (int64_t i = 0; i < n; ++i) orow[i] = g * (row[i] - m) * is + bb;
  }
  Var o = t.make(std::move(out), x->needs_grad || gamma->needs_grad || beta->needs_grad);
  if (o->needs_grad)
    o->back = [x, gamma, beta, o, mu, inv, ch, n] {
      for (int64_t c = 0; c < ch; ++c) {
        const double* row = x->val.data() + c * n;
        const double* go = o->grad.data() + c * n;
        const double m = (*mu)[static_cast<size_t>(c)];
        const double is = (*inv)[static_cast<size_t>(c)];
        const double g = gamma->val[c];
        double sum_go = 0, sum_goxh = 0;
        for (int64_t i = 0; i < n; ++i) {
          sum_go += go[i];
          sum_goxh += go[i] * (row[i] - m) * is;
        }
        if (gamma->needs_grad) gamma->g()[c] += sum_goxh;
        if (beta->needs_grad) beta->g()[c] += sum_go;
        if (x->needs_grad) {
          double* gx = x->g().data() + c * n;
          const double inv_n = 1.0 / static_cast<double>(n);
          for (int64_t i = 0; i < n; ++i) {
            const double xh = (row[i] - m) * is;
            gx[i] += g * is * (go[i] - inv_n * sum_go - xh * inv_n * sum_goxh);
          }
        }
      }
    };
  return o;
}

Var avgpool1d(Tape& t, Var x, int64_t k) {
  if (x->val.rank() != 2 || k < 1) throw std::invalid_argument("avgpool1d: bad args");
  const int64_t ch = x->val.dim(0), n = x->val.dim(1);
  const int64_t m = n / k;
  if (m < 1) throw std::invalid_argument("avgpool1d: input too short");
  Tensor out({ch, m});
  for (int64_t c = 0; c < ch; ++c)
    for (int64_t i = 0; i < m; ++i) {
      double s = 0;
      for (int64_t j = 0; j < k; ++j) s += x->val.at(c, i * k + j);
      out.at(c, i) = s / static_cast<double>(k);
    }
  Var o = t.make(std::move(out), x->needs_grad);
  if (o->needs_grad)
    o->back = [x, o, ch, m, k] {
      Tensor& gx = x->g();
      for (int64_t c = 0; c < ch; ++c)
        for (int64_t i = 0; i < m; ++i) {
          const double g = o->grad.at(c, i) / static_cast<double>(k);
          for (int64_t j = 0; j < k; ++j) gx.at(c, i * k + j) += g;
        }
    };
  return o;
}

namespace {

// Reflect-pad index map shared by stft_mag forward/backward.
int64_t reflect_index(int64_t i, int64_t pad, int64_t len) {
  int64_t k = i - pad;
  if (len == 1) return 0;
  while (k < 0 || k >= len) {
    if (k < 0) k = -k;
    if (k >= len) k = 2 * (len - 1) - k;
  }
  return k;
}

}  // namespace

Var stft_mag(Tape& t, Var x, int64_t nfft, int64_t hop) {
  if (x->val.rank() != 1) throw std::invalid_argument("stft_mag: rank-1 expected");
  const int64_t len = x->val.dim(0);
  const int64_t bins = nfft / 2 + 1;
  const int64_t frames = dsp::stft_frames(len, hop);
  const int64_t pad = nfft / 2;
  auto win = std::make_shared<std::vector<double>>(dsp::hann_window(nfft));
  // keep complex spectra for backward
  auto spectra = std::make_shared<std::vector<dsp::cdouble>>(
      static_cast<size_t>(bins * frames));
  Tensor out({bins, frames});
  std::vector<double> chunk(static_cast<size_t>(nfft));
  for (int64_t f = 0; f < frames; ++f) {
    const int64_t start = f * hop;
    for (int64_t i = 0; i < nfft; ++i)
      chunk[static_cast<size_t>(i)] =
          x->val[reflect_index(start + i, pad, len)] * (*win)[static_cast<size_t>(i)];
    auto spec = dsp::rfft(chunk.data(), nfft, nfft);
    for (int64_t bin = 0; bin < bins; ++bin) {
      (*spectra)[static_cast<size_t>(bin * frames + f)] = spec[static_cast<size_t>(bin)];
      out.at(bin, f) = std::abs(spec[static_cast<size_t>(bin)]);
    }
  }
  Var o = t.make(std::move(out), x->needs_grad);
  if (o->needs_grad)
    o->back = [x, o, spectra, win, nfft, hop, len, bins, frames, pad] {
      Tensor& gx = x->g();
      std::vector<dsp::cdouble> y(static_cast<size_t>(bins));
      for (int64_t f = 0; f < frames; ++f) {
        for (int64_t bin = 0; bin < bins; ++bin) {
          const dsp::cdouble z = (*spectra)[static_cast<size_t>(bin * frames + f)];
          const double m = std::abs(z);
          const double g = o->grad.at(bin, f);
          y[static_cast<size_t>(bin)] = m > 1e-300 ? g * z / m : dsp::cdouble(0, 0);
        }
        auto dchunk = dsp::half_spectrum_sum(y, nfft);
        const int64_t start = f * hop;
        for (int64_t i = 0; i < nfft; ++i) {
          const double v = dchunk[static_cast<size_t>(i)] * (*win)[static_cast<size_t>(i)];
          gx[reflect_index(start + i, pad, len)] += v;
        }
      }
    };
  return o;
}

Var istft_with_phase(Tape& t, Var mag, const Tensor& phase, int64_t nfft, int64_t hop,
                     int64_t out_len) {
  if (mag->val.rank() != 2) throw std::invalid_argument("istft: rank-2 expected");
  const int64_t bins = mag->val.dim(0), frames = mag->val.dim(1);
  if (!phase.same_shape(mag->val)) throw std::invalid_argument("istft: phase shape mismatch");
  if (bins != nfft / 2 + 1) throw std::invalid_argument("istft: bins != nfft/2+1");
  const int64_t pad = nfft / 2;
  auto win = std::make_shared<std::vector<double>>(dsp::hann_window(nfft));
  const int64_t total = (frames - 1) * hop + nfft;

  // window-sum normalization envelope
  auto wsum = std::make_shared<std::vector<double>>(static_cast<size_t>(total), 0.0);
  for (int64_t f = 0; f < frames; ++f)
    for (int64_t i = 0; i < nfft; ++i)
      (*wsum)[static_cast<size_t>(f * hop + i)] +=
          (*win)[static_cast<size_t>(i)] * (*win)[static_cast<size_t>(i)];

  auto phase_copy = std::make_shared<Tensor>(phase);
  std::vector<double> acc(static_cast<size_t>(total), 0.0);
  std::vector<dsp::cdouble> half(static_cast<size_t>(bins));
  for (int64_t f = 0; f < frames; ++f) {
    for (int64_t b = 0; b < bins; ++b) {
      const double m = mag->val.at(b, f);
      const double p = phase.at(b, f);
      half[static_cast<size_t>(b)] = dsp::cdouble(m * std::cos(p), m * std::sin(p));
    }
    auto chunk = dsp::irfft(half, nfft);
    for (int64_t i = 0; i < nfft; ++i)
      acc[static_cast<size_t>(f * hop + i)] +=
          chunk[static_cast<size_t>(i)] * (*win)[static_cast<size_t>(i)];
  }
  Tensor out({out_len});
  for (int64_t i = 0; i < out_len; ++i) {
    const int64_t j = i + pad;
    if (j < total && (*wsum)[static_cast<size_t>(j)] > 1e-10)
      out[i] = acc[static_cast<size_t>(j)] / (*wsum)[static_cast<size_t>(j)];
  }
  Var o = t.make(std::move(out), mag->needs_grad);
  if (o->needs_grad)
    o->back = [mag, o, phase_copy, win, wsum, nfft, hop, out_len, bins, frames, pad, total] {
      // distribute output grad back to windowed chunks
      std::vector<double> gacc(static_cast<size_t>(total), 0.0);
      for (int64_t i = 0; i < out_len; ++i) {
        const int64_t j = i + pad;
        if (j < total && (*wsum)[static_cast<size_t>(j)] > 1e-10)
          gacc[static_cast<size_t>(j)] = o->grad[i] / (*wsum)[static_cast<size_t>(j)];
      }
      Tensor& gm = mag->g();
      std::vector<double> gchunk(static_cast<size_t>(nfft));
      for (int64_t f = 0; f < frames; ++f) {
        for (int64_t i = 0; i < nfft; ++i)
          gchunk[static_cast<size_t>(i)] =
              gacc[static_cast<size_t>(f * hop + i)] * (*win)[static_cast<size_t>(i)];
        auto spec = dsp::rfft(gchunk.data(), nfft, nfft);
        for (int64_t b = 0; b < bins; ++b) {
          const double p = phase_copy->at(b, f);
          const double ck = (b == 0 || b == nfft / 2) ? 1.0 : 2.0;
          // d out / d mag = (ck/nfft) * Re(e^{j p} * conj(DFT(chunk)))
          const dsp::cdouble z = spec[static_cast<size_t>(b)];
          gm.at(b, f) += ck / static_cast<double>(nfft) *
                         (std::cos(p) * z.real() + std::sin(p) * z.imag());
        }
      }
    };
  return o;
}

Var iir_filter(Tape& t, Var x, const std::vector<BiquadCoeffs>& sos) {
  if (x->val.rank() != 1) throw std::invalid_argument("iir_filter: rank-1 expected");
  auto run = [sos](const std::vector<double>& in) {
    std::vector<double> y = in;
    for (const auto& bq : sos) {
      double z1 = 0, z2 = 0;
      for (double& v : y) {
        const double s = v;
        const double out = bq.b0 * s + z1;
        z1 = bq.b1 * s - bq.a1 * out + z2;
        z2 = bq.b2 * s - bq.a2 * out;
        v = out;
      }
    }
    return y;
  };
  Tensor out({x->val.dim(0)}, run(x->val.vec()));
  Var o = t.make(std::move(out), x->needs_grad);
  if (o->needs_grad)
    o->back = [x, o, run] {
      // adjoint of causal LTI filtering: reverse, filter, reverse
      std::vector<double> rg(o->grad.vec().rbegin(), o->grad.vec().rend());
      auto filtered = run(rg);
      Tensor& gx = x->g();
      const int64_t n = gx.numel();
      for (int64_t i = 0; i < n; ++i) gx[i] += filtered[static_cast<size_t>(n - 1 - i)];
    };
  return o;
}

Tensor init_normal(std::vector<int64_t> dims, double stddev, Rng& rng) {
  Tensor t(std::move(dims));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

Tensor init_conv_fanin(std::vector<int64_t> dims, Rng& rng) {
  if (dims.size() != 3 && dims.size() != 2)
    throw std::invalid_argument("init_conv_fanin: rank-2/3 expected");
  int64_t fan_in = dims.size() == 3 ? dims[1] * dims[2] : dims[1];
  const double stddev = 1.0 / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  return init_normal(std::move(dims), stddev, rng);
}

}  // namespace fakemark
