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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "core/audio.hpp"
#include "core/dsp.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace fakemark;
namespace to = testing_oracles;

namespace {
std::vector<double> sine(double freq, double rate, int64_t n, double amp = 1.0) {
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    x[static_cast<size_t>(i)] = amp * std::sin(2 * 3.14159265358979323846 * freq * i / rate);
  return x;
}

double rms(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}
}  // namespace

TEST_CASE("fft round trip and parseval") {
  Rng rng(3);
  std::vector<dsp::cdouble> a(256);
  for (auto& v : a) v = {rng.normal(), rng.normal()};
  auto b = a;
  dsp::fft(b, false);
  dsp::fft(b, true);
  for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("rfft/irfft round trip") {
  Rng rng(4);
  std::vector<double> x(128);
  for (auto& v : x) v = rng.normal();
  auto spec = dsp::rfft(x.data(), 128, 128);
  auto y = dsp::irfft(spec, 128);
  for (size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("butterworth responses at the documented cutoffs") {
  const double fs = 16000;
  auto lp = dsp::butterworth_lowpass(8, 5000, fs);
  // 1 kHz passes within 1 dB, 7 kHz attenuated by at least 20 dB
  auto in1k = sine(1000, fs, 16000);
  auto in7k = sine(7000, fs, 16000);
  auto out1k = dsp::sosfilt(lp, in1k);
  auto out7k = dsp::sosfilt(lp, in7k);
  // skip the transient
  auto tail = [](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + 4000, v.end());
  };
  const double g1 = 20 * std::log10(rms(tail(out1k)) / rms(tail(in1k)));
  const double g7 = 20 * std::log10(rms(tail(out7k)) / rms(tail(in7k)));
  CHECK(g1 > -1.0);
  CHECK(g7 < -20.0);

  auto hp = dsp::butterworth_highpass(8, 500, fs);
  auto in100 = sine(100, fs, 16000);
  auto in2k = sine(2000, fs, 16000);
  auto out100 = dsp::sosfilt(hp, in100);
  auto out2k = dsp::sosfilt(hp, in2k);
  CHECK(20 * std::log10(rms(tail(out100)) / rms(tail(in100))) < -20.0);
  CHECK(20 * std::log10(rms(tail(out2k)) / rms(tail(in2k))) > -1.0);
}

TEST_CASE("resampler keeps tones and durations") {
  const double fs = 16000;
  auto x = sine(440, fs, 16000, 0.8);
  auto up = dsp::resample(x, 2.0);
  CHECK(static_cast<int64_t>(up.size()) == 32000);
  CHECK(to::dominant_frequency(up, 32000) == doctest::Approx(440).epsilon(0.01));
  auto down = dsp::resample(up, 0.5);
  CHECK(static_cast<int64_t>(down.size()) == 16000);
  // round trip close to identity away from the edges
  double err = 0, ref = 0;
  for (size_t i = 2000; i + 2000 < down.size(); ++i) {
    err += (down[i] - x[i]) * (down[i] - x[i]);
    ref += x[i] * x[i];
  }
  CHECK(10 * std::log10(ref / std::max(err, 1e-30)) > 35.0);
}

TEST_CASE("active speech power tracks the active segment") {
  // half silence, half tone: the active estimate must follow the tone level
  std::vector<double> x(32000, 0.0);
  auto tone = sine(500, 16000, 16000, 0.25);
  std::copy(tone.begin(), tone.end(), x.begin() + 8000);
  const double p = dsp::active_speech_power(x, 16000);
  const double expected = 0.25 * 0.25 / 2;  // sine power
  CHECK(p == doctest::Approx(expected).epsilon(0.08));
}

TEST_CASE("k-weighting boosts highs and cuts sub-bass") {
  const double fs = 16000;
  auto sos = dsp::k_weighting(fs);
  auto tail = [](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + 4000, v.end());
  };
  const double g_low = 20 * std::log10(rms(tail(dsp::sosfilt(sos, sine(10, fs, 64000)))) /
                                       rms(tail(sine(10, fs, 64000))));
  const double g_mid = 20 * std::log10(rms(tail(dsp::sosfilt(sos, sine(1000, fs, 32000)))) /
                                       rms(tail(sine(1000, fs, 32000))));
  const double g_hi = 20 * std::log10(rms(tail(dsp::sosfilt(sos, sine(4000, fs, 32000)))) /
                                      rms(tail(sine(4000, fs, 32000))));
  CHECK(g_low < -10.0);             // RLB high pass
  CHECK(std::fabs(g_mid) < 1.0);    // ~unity mid band
  CHECK(g_hi > 2.0);                // shelf boost
}

TEST_CASE("wav encode/decode round trip and resample-on-load") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.id = "t";
  clip.samples = sine(440, 16000, 4000, 0.5);
  auto bytes = encode_wav(clip);
  AudioClip back = decode_wav(bytes);
  REQUIRE(back.length() == clip.length());
  CHECK(back.sample_rate == 16000);
  for (int64_t i = 0; i < clip.length(); ++i)
    CHECK(std::fabs(back.samples[static_cast<size_t>(i)] -
                    clip.samples[static_cast<size_t>(i)]) < 1.0 / 32000.0);

  // 8 kHz file becomes canonical on load
  AudioClip low;
  low.sample_rate = 8000;
  low.id = "low";
  low.samples = sine(440, 8000, 8000, 0.5);
  const std::string path = "/tmp/fakemark_test_8k.wav";
  save_wav(path, low);
  AudioClip canon = load_wav_canonical(path);
  CHECK(canon.sample_rate == 16000);
  CHECK(canon.length() == 16000);
  CHECK(to::dominant_frequency(canon.samples, 16000) == doctest::Approx(440).epsilon(0.02));
}

TEST_CASE("mel filterbank covers all bins up to fmax") {
  auto fb = dsp::mel_filterbank(80, 1024, 16000, 0, 8000);
  REQUIRE(fb.size() == 80u * 513u);
  // every interior bin below fmax has weight in some band
  for (int b = 5; b < 500; ++b) {
    double s = 0;
    for (int m = 0; m < 80; ++m) s += fb[static_cast<size_t>(m * 513 + b)];
    CHECK(s > 0.0);
  }
}
