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

#include "core/viz.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "core/dsp.hpp"

namespace fakemark {

void RgbImage::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const size_t i = (static_cast<size_t>(y) * width + x) * 3;
  pixels[i] = r;
  pixels[i + 1] = g;
  pixels[i + 2] = b;
}

namespace {

void put_be32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v >> 24));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc = static_cast<uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), out.data() + start, static_cast<uInt>(out.size() - start)));
  put_be32(out, crc);
}

}  // namespace

void write_png(const std::string& path, const RgbImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<size_t>(image.width) * image.height * 3)
    throw std::invalid_argument("write_png: bad image");

  // filter type 0 per scanline
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(image.height) * (image.width * 3 + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = image.pixels.data() + static_cast<size_t>(y) * image.width * 3;
    raw.insert(raw.end(), row, row + static_cast<size_t>(image.width) * 3);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("write_png: deflate failed");
  comp.resize(comp_len);

  std::vector<uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(image.width));
  put_be32(ihdr, static_cast<uint32_t>(image.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_png: cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

namespace {

// simple blue->yellow heat ramp on [0,1]
void heat(double v, uint8_t& r, uint8_t& g, uint8_t& b) {
  v = std::clamp(v, 0.0, 1.0);
  r = static_cast<uint8_t>(255.0 * std::clamp(1.5 * v - 0.25, 0.0, 1.0));
  g = static_cast<uint8_t>(255.0 * std::clamp(1.5 * v - 0.4, 0.0, 1.0));
  b = static_cast<uint8_t>(255.0 * std::clamp(1.0 - 1.2 * v, 0.1, 1.0));
}

void draw_spectrogram(RgbImage& img, int y0, int panel_h, const std::vector<double>& samples,
                      double floor_db, double ceil_db) {
  const int64_t nfft = 512, hop = 256;
  auto sp = dsp::stft_analyze(samples, nfft, hop);
  for (int x = 0; x < img.width; ++x) {
    const int64_t f = std::min<int64_t>(sp.frames - 1, sp.frames * x / img.width);
    for (int y = 0; y < panel_h; ++y) {
      const int64_t bin = sp.bins - 1 - (sp.bins - 1) * y / std::max(1, panel_h - 1);
      const double m = sp.mag[static_cast<size_t>(bin * sp.frames + f)];
      const double db = 20.0 * std::log10(std::max(m, 1e-9));
      const double v = (db - floor_db) / (ceil_db - floor_db);
      uint8_t r, g, b;
      heat(v, r, g, b);
      img.set(x, y0 + y, r, g, b);
    }
  }
}

}  // namespace

RgbImage render_watermark_panels(const AudioClip& clean, const AudioClip& watermarked) {
  const int width = 960, panel_h = 200, gap = 6;
  RgbImage img;
  img.width = width;
  img.height = panel_h * 3 + gap * 2;
  img.pixels.assign(static_cast<size_t>(img.width) * img.height * 3, 255);

  const int64_t n = std::min(clean.length(), watermarked.length());

  // panel 1: waveform overlay
  auto draw_wave = [&](const std::vector<double>& s, uint8_t r, uint8_t g, uint8_t b) {
    for (int x = 0; x < width; ++x) {
      const int64_t i0 = n * x / width;
      const int64_t i1 = std::max(i0 + 1, n * (x + 1) / width);
      double lo = 1e9, hi = -1e9;
      for (int64_t i = i0; i < i1 && i < n; ++i) {
        lo = std::min(lo, s[static_cast<size_t>(i)]);
        hi = std::max(hi, s[static_cast<size_t>(i)]);
      }
      if (lo > hi) continue;
      const int y_hi = static_cast<int>((1.0 - std::clamp(hi, -1.0, 1.0)) * 0.5 * (panel_h - 1));
      const int y_lo = static_cast<int>((1.0 - std::clamp(lo, -1.0, 1.0)) * 0.5 * (panel_h - 1));
      for (int y = y_hi; y <= y_lo; ++y) img.set(x, y, r, g, b);
    }
  };
  draw_wave(clean.samples, 70, 70, 200);
  draw_wave(watermarked.samples, 220, 120, 40);

  // panel 2: clean spectrogram
  draw_spectrogram(img, panel_h + gap, panel_h, clean.samples, -90.0, 30.0);

  // panel 3: watermark difference spectrogram (log scale)
  std::vector<double> diff(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    diff[static_cast<size_t>(i)] =
        watermarked.samples[static_cast<size_t>(i)] - clean.samples[static_cast<size_t>(i)];
  draw_spectrogram(img, 2 * (panel_h + gap), panel_h, diff, -120.0, 0.0);
  return img;
}

}  // namespace fakemark
