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

#include "core/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "core/dsp.hpp"
#include "core/subprocess.hpp"

namespace fakemark {

const char* transform_name(TransformKind k) {
  switch (k) {
    case TransformKind::encodec_adapter: return "encodec";
    case TransformKind::speed: return "speed";
    case TransformKind::resample: return "resample";
    case TransformKind::echo: return "echo";
    case TransformKind::white_noise: return "white_noise";
    case TransformKind::pink_noise: return "pink_noise";
    case TransformKind::lowpass: return "lowpass";
    case TransformKind::highpass: return "highpass";
    case TransformKind::bandpass: return "bandpass";
    case TransformKind::smooth: return "smooth";
    case TransformKind::boost: return "boost";
    case TransformKind::duck: return "duck";
    case TransformKind::aac_adapter: return "aac";
    case TransformKind::mp3_adapter: return "mp3";
    case TransformKind::identity: return "identity";
  }
  return "?";
}

std::vector<TransformKind> all_transform_kinds() {
  std::vector<TransformKind> out;
  for (int i = 0; i < kNumTransformKinds; ++i) out.push_back(static_cast<TransformKind>(i));
  return out;
}

AdapterConfig load_adapter_config(const std::string& path) {
  AdapterConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw std::runtime_error("adapters: cannot open " + path);
  nlohmann::json j;
  f >> j;
  if (!j.is_object()) throw std::runtime_error("adapters: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    cfg.commands[it.key()] = it.value().get<std::string>();
  return cfg;
}

TransformKind sample_transform(Rng& rng) {
  return static_cast<TransformKind>(rng.uniform_int(kNumTransformKinds));
}

std::optional<AudioClip> run_wav_adapter(const std::string& command, const AudioClip& clip) {
  try {
    auto wav = encode_wav(clip);
    ProcessResult res;
    if (command.find("{in}") != std::string::npos ||
        command.find("{out}") != std::string::npos)
      res = run_file_adapter(command, wav, ".wav");
    else
      res = run_process(command, wav);
    if (!res.ok() || res.out.empty()) return std::nullopt;
    AudioClip out = decode_wav(res.out, clip.id);
    if (out.sample_rate != kCanonicalRate) {
      out.samples = dsp::resample(out.samples,
                                  static_cast<double>(kCanonicalRate) / out.sample_rate);
      out.sample_rate = kCanonicalRate;
    }
    out.label = clip.label;
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

namespace {

AudioClip with_samples(const AudioClip& src, std::vector<double> samples) {
  AudioClip out = src;
  out.samples = std::move(samples);
  out.sample_rate = kCanonicalRate;
  return out;
}

TransformResult codec_transform(const char* key, const AudioClip& clip,
                                const AdapterConfig& adapters, bool resample_24k) {
  TransformResult res;
  auto cmd = adapters.command(key);
  if (!cmd) {
    res.clip = clip;
    res.substituted_identity = true;
    res.note = std::string(key) + ": adapter unconfigured, identity substituted";
    return res;
  }
  AudioClip in = clip;
  if (resample_24k) {
    in.samples = dsp::resample(clip.samples, 24000.0 / kCanonicalRate);
    in.sample_rate = 24000;
  }
  auto out = run_wav_adapter(*cmd, in);
  if (!out) {
    res.clip = clip;
    res.substituted_identity = true;
    res.note = std::string(key) + ": adapter failed, identity substituted";
    return res;
  }
  res.clip = std::move(*out);
  return res;
}

}  // namespace

TransformResult apply_transform(TransformKind kind, const AudioClip& clip, Rng& rng,
                                const AdapterConfig& adapters) {
  clip.validate();
  if (clip.sample_rate != kCanonicalRate)
    throw std::invalid_argument("apply_transform: expects 16 kHz input");
  TransformResult res;
  switch (kind) {
    case TransformKind::encodec_adapter:
      return codec_transform("encodec", clip, adapters, /*resample_24k=*/true);
    case TransformKind::aac_adapter:
      return codec_transform("aac", clip, adapters, /*resample_24k=*/false);
    case TransformKind::mp3_adapter:
      return codec_transform("mp3", clip, adapters, /*resample_24k=*/false);

    case TransformKind::speed: {
      const double factor = rng.uniform(0.9, 1.1);
      res.clip = with_samples(clip, dsp::resample(clip.samples, 1.0 / factor));
      return res;
    }
    case TransformKind::resample: {
      auto up = dsp::resample(clip.samples, 2.0);
      res.clip = with_samples(clip, dsp::resample(up, 0.5));
      return res;
    }
    case TransformKind::echo: {
      const double delay_s = rng.uniform(0.1, 0.5);
      const double vol = rng.uniform(0.1, 0.5);
      const int64_t d = static_cast<int64_t>(std::llround(delay_s * kCanonicalRate));
      std::vector<double> y = clip.samples;
      for (int64_t i = d; i < clip.length(); ++i)
        y[static_cast<size_t>(i)] += vol * clip.samples[static_cast<size_t>(i - d)];
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::white_noise: {
      std::vector<double> y = clip.samples;
      for (auto& v : y) v += rng.normal(0.0, 0.001);
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::pink_noise: {
      // Kellet three-pole pink approximation, scaled to the target std.
      const int64_t n = clip.length();
      std::vector<double> pink(static_cast<size_t>(n));
      double b0 = 0, b1 = 0, b2 = 0;
      for (int64_t i = 0; i < n; ++i) {
        const double w = rng.normal(0.0, 1.0);
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        pink[static_cast<size_t>(i)] = b0 + b1 + b2 + w * 0.1848;
      }
      double m = 0, var = 0;
      for (double v : pink) m += v;
      m /= static_cast<double>(n);
      for (double v : pink) var += (v - m) * (v - m);
      var /= static_cast<double>(n);
      const double s = var > 0 ? 0.01 / std::sqrt(var) : 0.0;
      std::vector<double> y = clip.samples;
      for (int64_t i = 0; i < n; ++i)
        y[static_cast<size_t>(i)] += (pink[static_cast<size_t>(i)] - m) * s;
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::lowpass: {
      auto sos = dsp::butterworth_lowpass(8, 5000.0, kCanonicalRate);
      res.clip = with_samples(clip, dsp::sosfilt(sos, clip.samples));
      return res;
    }
    case TransformKind::highpass: {
      auto sos = dsp::butterworth_highpass(8, 500.0, kCanonicalRate);
      res.clip = with_samples(clip, dsp::sosfilt(sos, clip.samples));
      return res;
    }
    case TransformKind::bandpass: {
      // upper edge 8 kHz sits at Nyquist; clamp just below for stability
      auto hp = dsp::butterworth_highpass(8, 300.0, kCanonicalRate);
      auto lp = dsp::butterworth_lowpass(8, std::min(8000.0, 0.495 * kCanonicalRate),
                                         kCanonicalRate);
      res.clip = with_samples(clip, dsp::sosfilt(lp, dsp::sosfilt(hp, clip.samples)));
      return res;
    }
    case TransformKind::smooth: {
      const int64_t w = 2 + rng.uniform_int(9);  // {2..10}
      const int64_t n = clip.length();
      std::vector<double> y(static_cast<size_t>(n));
      double acc = 0;
      for (int64_t i = 0; i < n; ++i) {
        acc += clip.samples[static_cast<size_t>(i)];
        if (i >= w) acc -= clip.samples[static_cast<size_t>(i - w)];
        y[static_cast<size_t>(i)] = acc / static_cast<double>(std::min(i + 1, w));
      }
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::boost: {
      std::vector<double> y = clip.samples;
      for (auto& v : y) v *= 1.2;
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::duck: {
      std::vector<double> y = clip.samples;
      for (auto& v : y) v *= 0.8;
      res.clip = with_samples(clip, std::move(y));
      return res;
    }
    case TransformKind::identity:
      res.clip = clip;
      return res;
  }
  throw std::logic_error("apply_transform: unknown kind");
}

}  // namespace fakemark
