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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/rng.hpp"

namespace fakemark {

// The fifteen training-time transformations, uniformly sampled. Codec kinds
// go through external adapter commands and fall back to identity (with a
// recorded substitution) when unconfigured.
enum class TransformKind {
  encodec_adapter,
  speed,
  resample,
  echo,
  white_noise,
  pink_noise,
  lowpass,
  highpass,
  bandpass,
  smooth,
  boost,
  duck,
  aac_adapter,
  mp3_adapter,
  identity,
};

constexpr int kNumTransformKinds = 15;

const char* transform_name(TransformKind k);
std::vector<TransformKind> all_transform_kinds();

// External command configuration. Keys used here: "encodec", "aac", "mp3".
// Commands either contain {in}/{out} placeholders (file mode) or read WAV on
// stdin and write WAV on stdout.
struct AdapterConfig {
  std::map<std::string, std::string> commands;

  std::optional<std::string> command(const std::string& key) const {
    auto it = commands.find(key);
    if (it == commands.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }
};

// Loads a JSON object {"name": "command", ...}; empty path -> empty config.
AdapterConfig load_adapter_config(const std::string& path);

TransformKind sample_transform(Rng& rng);

struct TransformResult {
  AudioClip clip;
  bool substituted_identity = false;  // codec adapter unavailable
  std::string note;
};

// Applies one transform with parameters drawn from the documented ranges.
// Output is always 16 kHz; rate-changing transforms resample back.
TransformResult apply_transform(TransformKind kind, const AudioClip& clip, Rng& rng,
                                const AdapterConfig& adapters = {});

// Runs a WAV->WAV adapter (file or stdio mode) and returns the decoded clip
// resampled to 16 kHz, or nullopt on failure.
std::optional<AudioClip> run_wav_adapter(const std::string& command, const AudioClip& clip);

}  // namespace fakemark
