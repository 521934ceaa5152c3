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
#include <string>
#include <vector>

#include "core/audio.hpp"

namespace fakemark {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // RGB, row-major

  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
};

void write_png(const std::string& path, const RgbImage& image);

// Three stacked panels: waveform overlay (clean vs watermarked), clean
// log-magnitude spectrogram, and the log-magnitude spectrogram of the
// difference signal.
RgbImage render_watermark_panels(const AudioClip& clean, const AudioClip& watermarked);

}  // namespace fakemark
