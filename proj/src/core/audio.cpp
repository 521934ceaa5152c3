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

#include "core/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "core/dsp.hpp"

namespace fakemark {

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 24));
}
void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}
uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}
uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

int16_t to_pcm16(double x) {
  const double v = std::clamp(x, -1.0, 1.0);
  return static_cast<int16_t>(std::lround(v * 32767.0));
}

}  // namespace

void AudioClip::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("audio clip '" + id + "': sample rate <= 0");
  if (samples.empty()) throw std::invalid_argument("audio clip '" + id + "': empty");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("audio clip '" + id + "': non-finite sample");
}

std::vector<uint8_t> encode_wav(const AudioClip& clip) {
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_size = n * 2;
  std::vector<uint8_t> b;
  b.reserve(44 + data_size);
  const char* riff = "RIFF";
  b.insert(b.end(), riff, riff + 4);
  put_u32(b, 36 + data_size);
  const char* wave = "WAVEfmt ";
  b.insert(b.end(), wave, wave + 8);
  put_u32(b, 16);
  put_u16(b, 1);  // PCM
  put_u16(b, 1);  // mono
  put_u32(b, static_cast<uint32_t>(clip.sample_rate));
  put_u32(b, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  const char* data = "data";
  b.insert(b.end(), data, data + 4);
  put_u32(b, data_size);
  for (double v : clip.samples) {
    const int16_t s = to_pcm16(v);
    b.push_back(static_cast<uint8_t>(s & 0xff));
    b.push_back(static_cast<uint8_t>((s >> 8) & 0xff));
  }
  return b;
}

AudioClip decode_wav(const std::vector<uint8_t>& bytes, const std::string& id) {
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav '" + id + "': not a RIFF/WAVE file");

  size_t pos = 12;
  int channels = 0, rate = 0, bits = 0, fmt = 0;
  const uint8_t* d = bytes.data();
  std::vector<double> samples;
  bool got_fmt = false, got_data = false;
  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_size = get_u32(d + pos + 4);
    const bool is_fmt = std::memcmp(d + pos, "fmt ", 4) == 0;
    const bool is_data = std::memcmp(d + pos, "data", 4) == 0;
    const size_t body = pos + 8;
    if (body + chunk_size > bytes.size() && !is_data)
      throw std::runtime_error("wav '" + id + "': truncated chunk");
    if (is_fmt) {
      if (chunk_size < 16) throw std::runtime_error("wav '" + id + "': bad fmt chunk");
      fmt = get_u16(d + body);
      channels = get_u16(d + body + 2);
      rate = static_cast<int>(get_u32(d + body + 4));
      bits = get_u16(d + body + 14);
      got_fmt = true;
    } else if (is_data) {
      if (!got_fmt) throw std::runtime_error("wav '" + id + "': data before fmt");
      const size_t avail = std::min<size_t>(chunk_size, bytes.size() - body);
      if (fmt == 1 && bits == 16) {
        const size_t frames = avail / (2 * static_cast<size_t>(channels));
        samples.resize(frames);
        for (size_t i = 0; i < frames; ++i) {
          double acc = 0;
          for (int c = 0; c < channels; ++c) {
            const int16_t s = static_cast<int16_t>(
                get_u16(d + body + (i * static_cast<size_t>(channels) + static_cast<size_t>(c)) * 2));
            acc += static_cast<double>(s) / 32768.0;
          }
          samples[i] = acc / channels;
        }
      } else if (fmt == 3 && bits == 32) {
        const size_t frames = avail / (4 * static_cast<size_t>(channels));
        samples.resize(frames);
        for (size_t i = 0; i < frames; ++i) {
          double acc = 0;
          for (int c = 0; c < channels; ++c) {
            uint32_t u = get_u32(d + body + (i * static_cast<size_t>(channels) + static_cast<size_t>(c)) * 4);
            float f;
            std::memcpy(&f, &u, 4);
            acc += static_cast<double>(f);
          }
          samples[i] = acc / channels;
        }
      } else {
        throw std::runtime_error("wav '" + id + "': unsupported format (PCM16/float32 only)");
      }
      got_data = true;
      break;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (!got_data) throw std::runtime_error("wav '" + id + "': no data chunk");
  if (samples.empty()) throw std::runtime_error("wav '" + id + "': empty data chunk");
  AudioClip clip;
  clip.samples = std::move(samples);
  clip.sample_rate = rate;
  clip.id = id;
  return clip;
}

AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_wav(bytes, path);
}

AudioClip load_wav_canonical(const std::string& path) {
  AudioClip clip = load_wav(path);
  if (clip.sample_rate != kCanonicalRate) {
    clip.samples = dsp::resample(clip.samples,
                                 static_cast<double>(kCanonicalRate) / clip.sample_rate);
    clip.sample_rate = kCanonicalRate;
  }
  return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
  auto bytes = encode_wav(clip);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write wav file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace fakemark
