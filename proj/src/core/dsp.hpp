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

#include <complex>
#include <cstdint>
#include <vector>

namespace fakemark::dsp {

using cdouble = std::complex<double>;

// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<cdouble>& a, bool inverse);

// Real-input FFT returning bins 0..n/2 (n power of two, x zero-padded/truncated to n).
std::vector<cdouble> rfft(const double* x, int64_t len, int64_t n);

// Inverse of rfft for a Hermitian half-spectrum; returns n real samples.
std::vector<double> irfft(const std::vector<cdouble>& half, int64_t n);

// sum_{k=0}^{n/2} Re(z_k * e^{+j 2 pi k t / n}) for t = 0..n-1 (no Hermitian
// doubling); the adjoint kernel used by spectrogram backward passes.
std::vector<double> half_spectrum_sum(const std::vector<cdouble>& half, int64_t n);

std::vector<double> hann_window(int64_t n);  // periodic Hann

// Frame count of a centered STFT: 1 + floor(len / hop).
int64_t stft_frames(int64_t len, int64_t hop);

// Centered magnitude spectrogram, frames x (nfft/2+1) flattened row-major as
// [bin][frame]. Non-differentiable helper for analysis paths.
struct Spectrogram {
  int64_t bins = 0;
  int64_t frames = 0;
  std::vector<double> mag;    // bins * frames
  std::vector<double> phase;  // bins * frames (radians)
};
Spectrogram stft_analyze(const std::vector<double>& x, int64_t nfft, int64_t hop);

// Overlap-add synthesis from magnitude+phase with Hann analysis/synthesis
// windows and window-sum normalization. Returns out_len samples.
std::vector<double> stft_synthesize(const std::vector<double>& mag,
                                    const std::vector<double>& phase, int64_t bins,
                                    int64_t frames, int64_t nfft, int64_t hop, int64_t out_len);

// Mel filterbank matrix (n_mels x (nfft/2+1)), HTK-style triangles, fmin..fmax.
std::vector<double> mel_filterbank(int64_t n_mels, int64_t nfft, double sample_rate,
                                   double fmin, double fmax);

// ---- IIR filtering ----------------------------------------------------------

struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;  // normalized a0 = 1
};

// Butterworth designs as cascades of biquads. `order` must be even.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate);
std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double sample_rate);

// BS.1770-style K-weighting (high shelf + high pass) redesigned at fs.
std::vector<Biquad> k_weighting(double sample_rate);

// Causal filtering with zero initial state.
std::vector<double> sosfilt(const std::vector<Biquad>& sos, const std::vector<double>& x);

// ---- resampling ---------------------------------------------------------------

// Arbitrary-ratio resampler (windowed-sinc, Kaiser beta 8.0, 32 taps/side at
// the lower of the two rates). ratio = out_rate / in_rate.
std::vector<double> resample(const std::vector<double>& x, double ratio);

// ---- misc analysis -------------------------------------------------------------

double spectral_centroid_hz(const std::vector<double>& x, double sample_rate);

// Power of active 20 ms frames (those within 30 dB of the loudest frame).
// Returns 0 for silent input.
double active_speech_power(const std::vector<double>& x, double sample_rate);

double db_from_power(double p);
double power_from_db(double db);

}  // namespace fakemark::dsp
