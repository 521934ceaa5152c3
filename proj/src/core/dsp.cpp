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

#include "core/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace fakemark::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

namespace {

// Per-size caches: bit-reversal permutation and forward twiddle factors
// w^k = e^{-2 pi i k / n} for k < n/2. Sizes used are few (512..65536).
struct FftTables {
  std::vector<int32_t> bitrev;
  std::vector<double> tw_re;
  std::vector<double> tw_im;
};

const FftTables& fft_tables(int64_t n) {
  static std::unordered_map<int64_t, FftTables> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  FftTables t;
  t.bitrev.resize(static_cast<size_t>(n));
  for (int64_t i = 0, j = 0; i < n; ++i) {
    t.bitrev[static_cast<size_t>(i)] = static_cast<int32_t>(j);
    int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
  }
  t.tw_re.resize(static_cast<size_t>(n / 2));
  t.tw_im.resize(static_cast<size_t>(n / 2));
  for (int64_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    t.tw_re[static_cast<size_t>(k)] = std::cos(ang);
    t.tw_im[static_cast<size_t>(k)] = std::sin(ang);
  }
  return cache.emplace(n, std::move(t)).first->second;
}

}  // namespace

void fft(std::vector<cdouble>& a, bool inverse) {
  const int64_t n = static_cast<int64_t>(a.size());
  if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
  if (n == 1) return;
  const FftTables& tables = fft_tables(n);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t j = tables.bitrev[static_cast<size_t>(i)];
    if (i < j) std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
  }
  const double sign = inverse ? -1.0 : 1.0;  // table holds forward twiddles
  for (int64_t len = 2; len <= n; len <<= 1) {
    const int64_t step = n / len;
    for (int64_t i = 0; i < n; i += len) {
      for (int64_t j = 0; j < len / 2; ++j) {
        const double wr = tables.tw_re[static_cast<size_t>(j * step)];
        const double wi = sign * tables.tw_im[static_cast<size_t>(j * step)];
        cdouble& lo = a[static_cast<size_t>(i + j)];
        cdouble& hi = a[static_cast<size_t>(i + j + len / 2)];
        const double vr = hi.real() * wr - hi.imag() * wi;
        const double vi = hi.real() * wi + hi.imag() * wr;
        hi = cdouble(lo.real() - vr, lo.imag() - vi);
        lo = cdouble(lo.real() + vr, lo.imag() + vi);
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

std::vector<cdouble> rfft(const double* x, int64_t len, int64_t n) {
  std::vector<cdouble> a(static_cast<size_t>(n));
  const int64_t copy = std::min(len, n);
  for (int64_t i = 0; i < copy; ++i) a[static_cast<size_t>(i)] = cdouble(x[i], 0.0);
  fft(a, false);
  a.resize(static_cast<size_t>(n / 2 + 1));
  return a;
}

std::vector<double> irfft(const std::vector<cdouble>& half, int64_t n) {
  if (static_cast<int64_t>(half.size()) != n / 2 + 1)
    throw std::invalid_argument("irfft: spectrum size mismatch");
  std::vector<cdouble> a(static_cast<size_t>(n));
  for (int64_t k = 0; k <= n / 2; ++k) a[static_cast<size_t>(k)] = half[static_cast<size_t>(k)];
  for (int64_t k = n / 2 + 1; k < n; ++k)
    a[static_cast<size_t>(k)] = std::conj(half[static_cast<size_t>(n - k)]);
  fft(a, true);
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].real();
  return out;
}

std::vector<double> half_spectrum_sum(const std::vector<cdouble>& half, int64_t n) {
  std::vector<cdouble> a(static_cast<size_t>(n));
  for (size_t k = 0; k < half.size(); ++k) a[k] = half[k];
  fft(a, true);  // (1/n) sum z_k e^{+j...}
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].real() * static_cast<double>(n);
  return out;
}

std::vector<double> hann_window(int64_t n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

int64_t stft_frames(int64_t len, int64_t hop) { return 1 + len / hop; }

Spectrogram stft_analyze(const std::vector<double>& x, int64_t nfft, int64_t hop) {
  const int64_t len = static_cast<int64_t>(x.size());
  const int64_t bins = nfft / 2 + 1;
  const int64_t frames = stft_frames(len, hop);
  const int64_t pad = nfft / 2;
  const auto win = hann_window(nfft);

  // reflect-padded sample accessor
  auto sample = [&](int64_t i) -> double {
    int64_t k = i - pad;
    if (len == 1) return x[0];
    while (k < 0 || k >= len) {
      if (k < 0) k = -k;
      if (k >= len) k = 2 * (len - 1) - k;
    }
    return x[static_cast<size_t>(k)];
  };

  Spectrogram sp;
  sp.bins = bins;
  sp.frames = frames;
  sp.mag.assign(static_cast<size_t>(bins * frames), 0.0);
  sp.phase.assign(static_cast<size_t>(bins * frames), 0.0);
  std::vector<double> chunk(static_cast<size_t>(nfft));
  for (int64_t f = 0; f < frames; ++f) {
    const int64_t start = f * hop;
    for (int64_t i = 0; i < nfft; ++i)
      chunk[static_cast<size_t>(i)] = sample(start + i) * win[static_cast<size_t>(i)];
    auto spec = rfft(chunk.data(), nfft, nfft);
    for (int64_t b = 0; b < bins; ++b) {
      const cdouble z = spec[static_cast<size_t>(b)];
      sp.mag[static_cast<size_t>(b * frames + f)] = std::abs(z);
      sp.phase[static_cast<size_t>(b * frames + f)] = std::arg(z);
    }
  }
  return sp;
}

std::vector<double> stft_synthesize(const std::vector<double>& mag,
                                    const std::vector<double>& phase, int64_t bins,
                                    int64_t frames, int64_t nfft, int64_t hop, int64_t out_len) {
  const int64_t pad = nfft / 2;
  const auto win = hann_window(nfft);
  const int64_t total = (frames - 1) * hop + nfft;
  std::vector<double> acc(static_cast<size_t>(total), 0.0);
  std::vector<double> wsum(static_cast<size_t>(total), 0.0);
  std::vector<cdouble> half(static_cast<size_t>(bins));
  for (int64_t f = 0; f < frames; ++f) {
    for (int64_t b = 0; b < bins; ++b) {
      const double m = mag[static_cast<size_t>(b * frames + f)];
      const double p = phase[static_cast<size_t>(b * frames + f)];
      half[static_cast<size_t>(b)] = cdouble(m * std::cos(p), m * std::sin(p));
    }
    auto chunk = irfft(half, nfft);
    const int64_t start = f * hop;
    for (int64_t i = 0; i < nfft; ++i) {
      const double w = win[static_cast<size_t>(i)];
      acc[static_cast<size_t>(start + i)] += chunk[static_cast<size_t>(i)] * w;
      wsum[static_cast<size_t>(start + i)] += w * w;
    }
  }
  std::vector<double> out(static_cast<size_t>(out_len), 0.0);
  for (int64_t i = 0; i < out_len; ++i) {
    const int64_t j = i + pad;
    if (j < total && wsum[static_cast<size_t>(j)] > 1e-10)
      out[static_cast<size_t>(i)] = acc[static_cast<size_t>(j)] / wsum[static_cast<size_t>(j)];
  }
  return out;
}

namespace {
double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
}  // namespace

std::vector<double> mel_filterbank(int64_t n_mels, int64_t nfft, double sample_rate,
                                   double fmin, double fmax) {
  const int64_t bins = nfft / 2 + 1;
  std::vector<double> fb(static_cast<size_t>(n_mels * bins), 0.0);
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> centers(static_cast<size_t>(n_mels + 2));
  for (int64_t i = 0; i < n_mels + 2; ++i)
    centers[static_cast<size_t>(i)] =
        mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  for (int64_t m = 0; m < n_mels; ++m) {
    const double lo = centers[static_cast<size_t>(m)];
    const double mid = centers[static_cast<size_t>(m + 1)];
    const double hi = centers[static_cast<size_t>(m + 2)];
    for (int64_t b = 0; b < bins; ++b) {
      const double f = sample_rate * static_cast<double>(b) / static_cast<double>(nfft);
      double w = 0;
      if (f > lo && f < hi) w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb[static_cast<size_t>(m * bins + b)] = w;
    }
  }
  return fb;
}

namespace {

// Bilinear-transform biquad from analog prototype section
// (s^2 + s/q + 1 normalized lowpass -> lp/hp at wc).
Biquad bilinear_lp(double wc, double q, double fs) {
  const double k = std::tan(kPi * wc / fs);
  const double norm = 1.0 / (1.0 + k / q + k * k);
  Biquad bq;
  bq.b0 = k * k * norm;
  bq.b1 = 2 * bq.b0;
  bq.b2 = bq.b0;
  bq.a1 = 2 * (k * k - 1) * norm;
  bq.a2 = (1 - k / q + k * k) * norm;
  return bq;
}

Biquad bilinear_hp(double wc, double q, double fs) {
  const double k = std::tan(kPi * wc / fs);
  const double norm = 1.0 / (1.0 + k / q + k * k);
  Biquad bq;
  bq.b0 = norm;
  bq.b1 = -2 * norm;
  bq.b2 = norm;
  bq.a1 = 2 * (k * k - 1) * norm;
  bq.a2 = (1 - k / q + k * k) * norm;
  return bq;
}

std::vector<double> butter_q(int order) {
  // Quality factors of the cascaded second-order sections of an
  // even-order Butterworth filter.
  std::vector<double> qs;
  for (int i = 0; i < order / 2; ++i) {
    const double theta = kPi * (2.0 * i + 1.0) / (2.0 * order);
    qs.push_back(1.0 / (2.0 * std::sin(theta)));
  }
  return qs;
}

}  // namespace

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
  if (order % 2 != 0) throw std::invalid_argument("butterworth: even order required");
  std::vector<Biquad> sos;
  for (double q : butter_q(order)) sos.push_back(bilinear_lp(cutoff_hz, q, sample_rate));
  return sos;
}

std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double sample_rate) {
  if (order % 2 != 0) throw std::invalid_argument("butterworth: even order required");
  std::vector<Biquad> sos;
  for (double q : butter_q(order)) sos.push_back(bilinear_hp(cutoff_hz, q, sample_rate));
  return sos;
}

std::vector<Biquad> k_weighting(double fs) {
  // Stage 1: high shelf, +4 dB, f0 1681.97 Hz. Stage 2: high pass 38.14 Hz.
  // Parameters follow the BS.1770 pre-filter; biquads re-derived at fs via
  // the RBJ cookbook so the filter works at 16 kHz.
  std::vector<Biquad> sos;
  {
    const double f0 = 1681.9744509555319;
    const double gain_db = 3.99984385397;
    const double q = 0.7071752369554196;
    const double a = std::pow(10.0, gain_db / 40.0);
    const double w0 = 2 * kPi * f0 / fs;
    const double alpha = std::sin(w0) / (2 * q);
    const double cw = std::cos(w0);
    const double sa = 2 * std::sqrt(a) * alpha;
    const double a0 = (a + 1) - (a - 1) * cw + sa;
    Biquad bq;
    bq.b0 = (a * ((a + 1) + (a - 1) * cw + sa)) / a0;
    bq.b1 = (-2 * a * ((a - 1) + (a + 1) * cw)) / a0;
    bq.b2 = (a * ((a + 1) + (a - 1) * cw - sa)) / a0;
    bq.a1 = (2 * ((a - 1) - (a + 1) * cw)) / a0;
    bq.a2 = ((a + 1) - (a - 1) * cw - sa) / a0;
    sos.push_back(bq);
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    sos.push_back(bilinear_hp(f0, q, fs));
  }
  return sos;
}

std::vector<double> sosfilt(const std::vector<Biquad>& sos, const std::vector<double>& x) {
  std::vector<double> y = x;
  for (const Biquad& bq : sos) {
    double z1 = 0, z2 = 0;  // transposed direct form II
    for (double& v : y) {
      const double in = v;
      const double out = bq.b0 * in + z1;
      z1 = bq.b1 * in - bq.a1 * out + z2;
      z2 = bq.b2 * in - bq.a2 * out;
      v = out;
    }
  }
  return y;
}

namespace {

double bessel_i0(double x) {
  // Series expansion; converges quickly for the beta values used here.
  double sum = 1.0, term = 1.0;
  const double x2 = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= x2 / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

std::vector<double> resample(const std::vector<double>& x, double ratio) {
  if (ratio <= 0) throw std::invalid_argument("resample: ratio must be positive");
  const int64_t in_len = static_cast<int64_t>(x.size());
  const int64_t out_len = std::max<int64_t>(1, static_cast<int64_t>(std::llround(in_len * ratio)));
  if (in_len == 0) return {};
  const double beta = 8.0;
  const double i0b = bessel_i0(beta);
  const double fc = std::min(1.0, ratio);  // anti-alias when downsampling
  const int taps = 32;                     // per side, at input rate / fc
  std::vector<double> out(static_cast<size_t>(out_len), 0.0);
  const double half_width = taps / fc;
  for (int64_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const int64_t lo = static_cast<int64_t>(std::ceil(center - half_width));
    const int64_t hi = static_cast<int64_t>(std::floor(center + half_width));
    double acc = 0, wsum = 0;
    for (int64_t m = std::max<int64_t>(0, lo); m <= std::min(in_len - 1, hi); ++m) {
      const double d = (static_cast<double>(m) - center) * fc;
      double sinc = d == 0 ? 1.0 : std::sin(kPi * d) / (kPi * d);
      const double u = d / static_cast<double>(taps);
      const double kw = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0b;
      const double w = sinc * kw;
      acc += w * x[static_cast<size_t>(m)];
      wsum += w;
    }
    // normalize by the window sum so DC gain stays 1 near the edges
    out[static_cast<size_t>(n)] = wsum > 1e-12 ? acc / wsum : 0.0;
  }
  return out;
}

double spectral_centroid_hz(const std::vector<double>& x, double sample_rate) {
  int64_t nfft = 1;
  while (nfft < static_cast<int64_t>(x.size()) && nfft < 65536) nfft <<= 1;
  auto spec = rfft(x.data(), static_cast<int64_t>(x.size()), nfft);
  double num = 0, den = 0;
  for (size_t k = 0; k < spec.size(); ++k) {
    const double p = std::norm(spec[k]);
    const double f = sample_rate * static_cast<double>(k) / static_cast<double>(nfft);
    num += f * p;
    den += p;
  }
  return den > 0 ? num / den : 0.0;
}

double active_speech_power(const std::vector<double>& x, double sample_rate) {
  const int64_t frame = std::max<int64_t>(1, static_cast<int64_t>(std::llround(0.02 * sample_rate)));
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t frames = n / frame;
  if (frames == 0) {
    double p = 0;
    for (double v : x) p += v * v;
    return n > 0 ? p / static_cast<double>(n) : 0.0;
  }
  std::vector<double> pw(static_cast<size_t>(frames));
  double mx = 0;
  for (int64_t f = 0; f < frames; ++f) {
    double p = 0;
    for (int64_t i = f * frame; i < (f + 1) * frame; ++i) p += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    p /= static_cast<double>(frame);
    pw[static_cast<size_t>(f)] = p;
    mx = std::max(mx, p);
  }
  if (mx <= 0) return 0.0;
  const double thresh = mx * std::pow(10.0, -30.0 / 10.0);  // 30 dB below peak frame
  double sum = 0;
  int64_t cnt = 0;
  for (double p : pw)
    if (p >= thresh) {
      sum += p;
      ++cnt;
    }
  return cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
}

double db_from_power(double p) { return 10.0 * std::log10(std::max(p, 1e-30)); }
double power_from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace fakemark::dsp
