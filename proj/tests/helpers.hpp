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
//
// Shared test oracles. Everything here is independent of the library code it
// checks: finite differences, brute-force scans, and closed-form statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace testing_oracles {

// Central finite-difference gradient of f at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    da += a[i] * a[i];
    db += b[i] * b[i];
  }
  const double denom = std::max({std::sqrt(da), std::sqrt(db), 1e-12});
  return std::sqrt(num) / denom;
}

// Exhaustive nearest-code search; ties resolved by lowest class id.
inline int brute_force_hamming(const std::vector<int>& bits,
                               const std::vector<std::vector<int>>& codes) {
  int best = -1;
  int best_d = 1 << 30;
  for (size_t c = 0; c < codes.size(); ++c) {
    int d = 0;
    for (size_t i = 0; i < bits.size(); ++i) d += bits[i] != codes[c][i];
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Upper-tail probability of the chi-square distribution via the
// regularized incomplete gamma function (series + continued fraction).
inline double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) return 1.0;
  auto gln = std::lgamma(a);
  if (x < a + 1.0) {
    // lower series
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-14) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - gln);
    return 1.0 - p;
  }
  // continued fraction for Q
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-14) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_p_value(const std::vector<int64_t>& counts, double expected) {
  double stat = 0;
  for (int64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return gamma_q(0.5 * static_cast<double>(counts.size() - 1), 0.5 * stat);
}

// Kolmogorov-Smirnov p-value against U(lo, hi) (asymptotic distribution).
inline double ks_uniform_p_value(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double cdf = std::clamp((samples[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max(d, std::fabs(cdf - static_cast<double>(i + 1) / n));
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Dominant frequency of a signal via zero-padded DFT peak (quadratic refine).
inline double dominant_frequency(const std::vector<double>& x, double sample_rate) {
  int64_t n = 1;
  while (n < static_cast<int64_t>(x.size())) n <<= 1;
  n <<= 2;  // pad for resolution
  std::vector<double> re(static_cast<size_t>(n), 0.0), im(static_cast<size_t>(n), 0.0);
  for (size_t i = 0; i < x.size(); ++i) re[i] = x[i];
  // plain DFT on a coarse grid would be slow; use Goertzel-free radix-2
  // (iterative bit-reversal FFT, local copy to stay independent of the library)
  {
    int64_t j = 0;
    for (int64_t i = 1; i < n; ++i) {
      int64_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) {
        std::swap(re[static_cast<size_t>(i)], re[static_cast<size_t>(j)]);
        std::swap(im[static_cast<size_t>(i)], im[static_cast<size_t>(j)]);
      }
    }
    for (int64_t len = 2; len <= n; len <<= 1) {
      const double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
      const double wr = std::cos(ang), wi = std::sin(ang);
      for (int64_t i = 0; i < n; i += len) {
        double cr = 1, ci2 = 0;
        for (int64_t k = 0; k < len / 2; ++k) {
          const size_t a = static_cast<size_t>(i + k);
          const size_t b = static_cast<size_t>(i + k + len / 2);
          const double tr = re[b] * cr - im[b] * ci2;
          const double ti = re[b] * ci2 + im[b] * cr;
          re[b] = re[a] - tr;
          im[b] = im[a] - ti;
          re[a] += tr;
          im[a] += ti;
          const double ncr = cr * wr - ci2 * wi;
          ci2 = cr * wi + ci2 * wr;
          cr = ncr;
        }
      }
    }
  }
  int64_t best = 1;
  double best_p = 0;
  for (int64_t k = 1; k < n / 2; ++k) {
    const double p = re[static_cast<size_t>(k)] * re[static_cast<size_t>(k)] +
                     im[static_cast<size_t>(k)] * im[static_cast<size_t>(k)];
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  return sample_rate * static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace testing_oracles
