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
#include <optional>
#include <string>
#include <vector>

namespace fakemark {

constexpr int kCanonicalRate = 16000;

// Mono waveform with sample rate; the carrier signal and everything derived
// from it.
struct AudioClip {
  std::vector<double> samples;  // amplitudes, nominally in [-1, 1]
  int sample_rate = kCanonicalRate;
  std::string id;
  std::optional<int> label;

  int64_t length() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
  void validate() const;  // finite samples, rate > 0, length >= 1
};

// RIFF WAV, PCM 16-bit mono. Multichannel input is mixed down; any sample
// rate is accepted and resampled to 16 kHz by load_wav_canonical.
AudioClip load_wav(const std::string& path);
AudioClip load_wav_canonical(const std::string& path);
void save_wav(const std::string& path, const AudioClip& clip);

// In-memory WAV encode/decode (adapter plumbing).
std::vector<uint8_t> encode_wav(const AudioClip& clip);
AudioClip decode_wav(const std::vector<uint8_t>& bytes, const std::string& id = "stdin");

}  // namespace fakemark
