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

#include "core/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "core/dsp.hpp"
#include "core/subprocess.hpp"

namespace fakemark {

const char* distortion_name(DistortionKind k) {
  switch (k) {
    case DistortionKind::none: return "none";
    case DistortionKind::pitch: return "pitch";
    case DistortionKind::speed: return "speed";
    case DistortionKind::noise: return "noise";
    case DistortionKind::codec_adapter: return "codec";
    case DistortionKind::vocoder_adapter: return "vocoder";
    case DistortionKind::overwrite_attack: return "overwrite";
    case DistortionKind::averaging_attack: return "averaging";
  }
  return "?";
}

std::optional<DistortionKind> distortion_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(DistortionKind::averaging_attack); ++i)
    if (name == distortion_name(static_cast<DistortionKind>(i)))
      return static_cast<DistortionKind>(i);
  return std::nullopt;
}

DistortionSpec pitch_spec(uint64_t seed, double lo, double hi) {
  DistortionSpec s;
  s.kind = DistortionKind::pitch;
  s.seed = seed;
  s.lo = lo;
  s.hi = hi;
  return s;
}

DistortionSpec speed_spec(uint64_t seed, double lo, double hi) {
  DistortionSpec s;
  s.kind = DistortionKind::speed;
  s.seed = seed;
  s.lo = lo;
  s.hi = hi;
  return s;
}

DistortionSpec noise_spec(uint64_t seed, double snr_db) {
  DistortionSpec s;
  s.kind = DistortionKind::noise;
  s.seed = seed;
  s.snr_db = snr_db;
  return s;
}

namespace {

uint64_t clip_hash(const std::string& id) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::vector<double> phase_vocoder_stretch(const std::vector<double>& x, double stretch) {
  const int64_t nfft = 1024, hop = 256;
  if (static_cast<int64_t>(x.size()) < nfft) {
    // too short for framing; fall back to resampling (changes pitch, but
    // sub-64 ms inputs carry no usable pitch contour anyway)
    return dsp::resample(x, stretch);
  }
  auto sp = dsp::stft_analyze(x, nfft, hop);
  const int64_t in_frames = sp.frames;
  const int64_t out_frames =
      std::max<int64_t>(2, static_cast<int64_t>(std::llround(in_frames * stretch)));
  const int64_t bins = sp.bins;

  std::vector<double> out_mag(static_cast<size_t>(bins * out_frames));
  std::vector<double> out_phase(static_cast<size_t>(bins * out_frames));
  std::vector<double> phase_acc(static_cast<size_t>(bins), 0.0);
  for (int64_t of = 0; of < out_frames; ++of) {
    const double src = static_cast<double>(of) / stretch;
    const int64_t a = std::min<int64_t>(in_frames - 1, static_cast<int64_t>(src));
    const int64_t b = std::min<int64_t>(in_frames - 1, a + 1);
    const double frac = src - static_cast<double>(a);
    for (int64_t k = 0; k < bins; ++k) {
      const double m =
          (1 - frac) * sp.mag[static_cast<size_t>(k * in_frames + a)] +
          frac * sp.mag[static_cast<size_t>(k * in_frames + b)];
      out_mag[static_cast<size_t>(k * out_frames + of)] = m;
      if (of == 0) {
        phase_acc[static_cast<size_t>(k)] = sp.phase[static_cast<size_t>(k * in_frames)];
      } else {
        // instantaneous frequency from consecutive analysis frames
        const double w_k = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(nfft);
        const double pa = sp.phase[static_cast<size_t>(k * in_frames + a)];
        const double pb = sp.phase[static_cast<size_t>(k * in_frames + b)];
        double dphi = pb - pa - w_k * hop;
        dphi -= 2.0 * kPi * std::round(dphi / (2.0 * kPi));
        const double w_inst = w_k + dphi / hop;
        phase_acc[static_cast<size_t>(k)] += w_inst * hop;
      }
      out_phase[static_cast<size_t>(k * out_frames + of)] = phase_acc[static_cast<size_t>(k)];
    }
  }
  const int64_t out_len = static_cast<int64_t>(std::llround(x.size() * stretch));
  return dsp::stft_synthesize(out_mag, out_phase, bins, out_frames, nfft, hop, out_len);
}

AudioClip distort(const AudioClip& s_w, const DistortionSpec& spec) {
  s_w.validate();
  Rng rng = Rng(spec.seed).derive("distort").derive(clip_hash(s_w.id));
  AudioClip out = s_w;
  switch (spec.kind) {
    case DistortionKind::none:
      return out;
    case DistortionKind::pitch: {
      const double semitones = rng.uniform(spec.lo, spec.hi);
      const double k = std::pow(2.0, semitones / 12.0);
      // resample compresses duration by 1/k and shifts pitch by k, the
      // vocoder stretch restores the original duration
      auto shifted = dsp::resample(s_w.samples, 1.0 / k);
      out.samples = phase_vocoder_stretch(shifted, static_cast<double>(s_w.samples.size()) /
                                                       static_cast<double>(shifted.size()));
      return out;
    }
    case DistortionKind::speed: {
      const double factor = rng.uniform(spec.lo, spec.hi);
      out.samples = dsp::resample(s_w.samples, 1.0 / factor);
      return out;
    }
    case DistortionKind::noise: {
      // band-limited noise, scaled so the active-speech-level SNR equals
      // snr_db exactly under the shared estimator
      const double center = rng.uniform(600.0, 5200.0);
      const double width = rng.uniform(400.0, 1600.0);
      std::vector<double> noise(s_w.samples.size());
      for (auto& v : noise) v = rng.normal(0.0, 1.0);
      auto hp = dsp::butterworth_highpass(4, std::max(50.0, center - width / 2), 16000.0);
      auto lp = dsp::butterworth_lowpass(4, std::min(7600.0, center + width / 2), 16000.0);
      noise = dsp::sosfilt(lp, dsp::sosfilt(hp, noise));
      double npow = 0;
      for (double v : noise) npow += v * v;
      npow /= static_cast<double>(noise.size());
      const double spow = dsp::active_speech_power(s_w.samples, s_w.sample_rate);
      if (npow > 0 && spow > 0) {
        const double want = spow / dsp::power_from_db(spec.snr_db);
        const double g = std::sqrt(want / npow);
        for (size_t i = 0; i < noise.size(); ++i) out.samples[i] += g * noise[i];
      }
      return out;
    }
    case DistortionKind::codec_adapter:
    case DistortionKind::vocoder_adapter: {
      if (spec.adapter_command.empty() || spec.adapter_command == "builtin:regen-lowpass") {
        // bundled regeneration stub: 24 kHz round trip + lowpass
        auto up = dsp::resample(s_w.samples, 24000.0 / 16000.0);
        auto down = dsp::resample(up, 16000.0 / 24000.0);
        down.resize(s_w.samples.size(), 0.0);
        auto lp = dsp::butterworth_lowpass(8, 5500.0, 16000.0);
        out.samples = dsp::sosfilt(lp, down);
        return out;
      }
      auto res = run_wav_adapter(spec.adapter_command, s_w);
      if (!res) throw std::runtime_error("distort: adapter failed (" + spec.row_name() + ")");
      return *res;
    }
    case DistortionKind::overwrite_attack:
    case DistortionKind::averaging_attack:
      throw std::logic_error("distort: attack kinds use their dedicated entry points");
  }
  throw std::logic_error("distort: unknown kind");
}

AudioClip overwrite_attack(const AudioClip& s_w, const std::vector<Embedder>& watermarkers,
                           int rounds) {
  if (watermarkers.empty())
    throw std::invalid_argument("overwrite_attack: at least one embedder required");
  AudioClip cur = s_w;
  for (int r = 0; r < rounds; ++r)
    for (const auto& emb : watermarkers) cur = emb(cur);
  return cur;
}

AudioClip averaging_attack(const AudioClip& s_w, const std::vector<double>& avg_delta) {
  AudioClip out = s_w;
  if (avg_delta.empty()) return out;
  for (size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] -= avg_delta[i % avg_delta.size()];  // tiled when shorter
  return out;
}

std::vector<double> compute_average_watermark(const Embedder& embedder,
                                              const std::vector<AudioClip>& corpus) {
  if (corpus.empty()) return {};
  size_t min_len = SIZE_MAX;
  std::vector<std::vector<double>> deltas;
  for (const auto& clip : corpus) {
    AudioClip wm = embedder(clip);
    const size_t n = std::min(wm.samples.size(), clip.samples.size());
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = wm.samples[i] - clip.samples[i];
    min_len = std::min(min_len, n);
    deltas.push_back(std::move(d));
  }
  std::vector<double> avg(min_len, 0.0);
  for (const auto& d : deltas)
    for (size_t i = 0; i < min_len; ++i) avg[i] += d[i];
  for (auto& v : avg) v /= static_cast<double>(deltas.size());
  return avg;
}

double si_snr(const std::vector<double>& reference, const std::vector<double>& estimate) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("si_snr: length mismatch");
  double rr = 0, er = 0;
  for (size_t i = 0; i < reference.size(); ++i) {
    rr += reference[i] * reference[i];
    er += estimate[i] * reference[i];
  }
  if (rr <= 0) throw std::invalid_argument("si_snr: all-zero reference");
  const double a = er / rr;
  double target = 0, resid = 0;
  for (size_t i = 0; i < reference.size(); ++i) {
    const double t = a * reference[i];
    const double e = estimate[i] - t;
    target += t * t;
    resid += e * e;
  }
  if (resid <= 0) return 100.0;
  const double v = 10.0 * std::log10(target / resid);
  return std::min(v, 100.0);
}

double si_snr(const AudioClip& reference, const AudioClip& estimate) {
  return si_snr(reference.samples, estimate.samples);
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("accuracy: size mismatch");
  if (predictions.empty()) return 0.0;
  int64_t ok = 0;
  for (size_t i = 0; i < predictions.size(); ++i) ok += predictions[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(predictions.size());
}

std::optional<double> quality_adapter(QualityMetric metric, const AudioClip& ref,
                                      const AudioClip& deg, const AdapterConfig& adapters) {
  const char* key = metric == QualityMetric::pesq    ? "pesq"
                    : metric == QualityMetric::visqol ? "visqol"
                                                       : "pq";
  auto cmd = adapters.command(key);
  if (!cmd) return std::nullopt;
  try {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    const std::string base =
        "fakemark_q_" + std::to_string(::getpid()) + "_" + std::string(key);
    const std::string ref_path = (dir / (base + "_ref.wav")).string();
    const std::string deg_path = (dir / (base + "_deg.wav")).string();
    save_wav(ref_path, ref);
    save_wav(deg_path, deg);
    std::string command = *cmd;
    auto replace_all = [&command](const std::string& what, const std::string& with) {
      size_t pos = 0;
      while ((pos = command.find(what, pos)) != std::string::npos) {
        command.replace(pos, what.size(), with);
        pos += with.size();
      }
    };
    replace_all("{ref}", ref_path);
    replace_all("{deg}", deg_path);
    ProcessResult res = run_process(command, {});
    std::error_code ec;
    fs::remove(ref_path, ec);
    fs::remove(deg_path, ec);
    if (!res.ok()) return std::nullopt;
    // last parseable float on stdout
    std::string text(res.out.begin(), res.out.end());
    std::istringstream ss(text);
    std::string tok;
    std::optional<double> last;
    while (ss >> tok) {
      try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size()) last = v;
      } catch (const std::exception&) {
      }
    }
    return last;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// ---- report --------------------------------------------------------------------------

const char* policy_name(WatermarkPolicy p) {
  switch (p) {
    case WatermarkPolicy::none: return "none";
    case WatermarkPolicy::random: return "random";
    case WatermarkPolicy::matching: return "matching";
  }
  return "?";
}

std::optional<WatermarkPolicy> policy_from_name(const std::string& name) {
  if (name == "none") return WatermarkPolicy::none;
  if (name == "random") return WatermarkPolicy::random;
  if (name == "matching") return WatermarkPolicy::matching;
  return std::nullopt;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::string serialize_report(const BenchReport& report) {
  std::ostringstream out;
  out << kReportHeader << "\n";
  for (const auto& m : report.meta) out << "#" << m << "\n";
  out << "distortion,model,policy,accuracy,n,si_snr,pesq,visqol,pq,status\n";
  for (const auto& c : report.cells) {
    out << c.distortion << ',' << c.model << ',' << c.policy << ',' << fmt_opt(c.accuracy)
        << ',' << c.n << ',' << fmt_opt(c.si_snr) << ',' << fmt_opt(c.pesq) << ','
        << fmt_opt(c.visqol) << ',' << fmt_opt(c.pq) << ',' << c.status << "\n";
  }
  return out.str();
}

void write_report(const std::string& path, const BenchReport& report) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("report: cannot write " + path);
  const std::string text = serialize_report(report);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string format_report_table(const BenchReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-14s %-9s %9s %5s %9s %7s %7s %7s %8s", "distortion",
                "model", "policy", "accuracy", "n", "si_snr", "pesq", "visqol", "pq", "status");
  out << buf << "\n";
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%-12s %-14s %-9s %9s %5d %9s %7s %7s %7s %8s",
                  c.distortion.c_str(), c.model.c_str(), c.policy.c_str(),
                  fmt_opt(c.accuracy).c_str(), c.n, fmt_opt(c.si_snr).c_str(),
                  fmt_opt(c.pesq).c_str(), fmt_opt(c.visqol).c_str(), fmt_opt(c.pq).c_str(),
                  c.status.c_str());
    out << buf << "\n";
  }
  return out.str();
}

// ---- grid ----------------------------------------------------------------------------

BenchReport run_grid(const std::vector<BenchModel>& models,
                     const std::vector<DistortionSpec>& distortions_in, const Manifest& testset,
                     const GridOptions& opts) {
  std::vector<DistortionSpec> distortions = distortions_in;
  if (distortions.empty()) {
    DistortionSpec none;
    none.kind = DistortionKind::none;
    distortions.push_back(none);
  }

  BenchReport report;
  report.meta.push_back("seed=" + std::to_string(opts.seed));
  report.meta.push_back("policy=" + std::string(policy_name(opts.policy)));
  report.meta.push_back("averaging-corpus=test[0.." +
                        std::to_string(opts.averaging_corpus_size) + ")");

  for (const auto& bm : models) {
    Model& model = *bm.model;
    const SystemRegistry& reg = model.registry();
    const int64_t min_len = model.min_generator_samples();

    // load test clips with labels
    std::vector<AudioClip> clips;
    std::vector<int> labels;
    for (const auto& rec : testset.records) {
      if (rec.split != "test") continue;
      const RegistryEntry* e = reg.find(rec.system_name);
      if (!e) continue;
      AudioClip clip = load_wav_canonical(testset.root + "/" + rec.path);
      if (clip.length() < std::max<int64_t>(min_len, 400)) continue;
      clip.label = e->class_id;
      clips.push_back(std::move(clip));
      labels.push_back(e->class_id);
    }

    // policy application (watermark before distortion) + quality block
    Rng policy_rng = Rng(opts.seed).derive("policy").derive(clip_hash(bm.name));
    std::vector<AudioClip> prepared;
    std::optional<double> mean_sisnr;
    std::optional<double> mean_pesq, mean_visqol, mean_pq;
    {
      double sisnr_sum = 0;
      int sisnr_n = 0;
      double pesq_sum = 0, visqol_sum = 0, pq_sum = 0;
      int pesq_n = 0, visqol_n = 0, pq_n = 0;
      for (size_t i = 0; i < clips.size(); ++i) {
        AudioClip use = clips[i];
        if (opts.policy != WatermarkPolicy::none) {
          const int w = opts.policy == WatermarkPolicy::matching
                            ? labels[i]
                            : static_cast<int>(policy_rng.uniform_int(reg.num_classes));
          use = model.embed_clip(clips[i], w).watermarked;
          sisnr_sum += si_snr(clips[i], use);
          ++sisnr_n;
          if (i < 4) {  // quality adapters are expensive; sample a few clips
            if (auto v = quality_adapter(QualityMetric::pesq, clips[i], use, opts.adapters)) {
              pesq_sum += *v;
              ++pesq_n;
            }
            if (auto v = quality_adapter(QualityMetric::visqol, clips[i], use, opts.adapters)) {
              visqol_sum += *v;
              ++visqol_n;
            }
            if (auto v = quality_adapter(QualityMetric::pq, clips[i], use, opts.adapters)) {
              pq_sum += *v;
              ++pq_n;
            }
          }
        }
        prepared.push_back(std::move(use));
      }
      if (sisnr_n > 0) mean_sisnr = sisnr_sum / sisnr_n;
      if (pesq_n > 0) mean_pesq = pesq_sum / pesq_n;
      if (visqol_n > 0) mean_visqol = visqol_sum / visqol_n;
      if (pq_n > 0) mean_pq = pq_sum / pq_n;
    }

    // averaging attack support: the model's own average watermark
    std::vector<double> avg_delta;
    bool avg_ready = false;

    for (const auto& spec : distortions) {
      BenchCell cell;
      cell.distortion = spec.row_name();
      cell.model = bm.name;
      cell.policy = policy_name(opts.policy);
      cell.si_snr = mean_sisnr;
      cell.pesq = mean_pesq;
      cell.visqol = mean_visqol;
      cell.pq = mean_pq;
      try {
        std::vector<int> preds;
        preds.reserve(prepared.size());
        for (size_t i = 0; i < prepared.size(); ++i) {
          AudioClip distorted;
          switch (spec.kind) {
            case DistortionKind::overwrite_attack: {
              Rng orng = Rng(spec.seed).derive("overwrite").derive(clip_hash(prepared[i].id));
              std::vector<Embedder> embs{[&](const AudioClip& c) {
                const int w = static_cast<int>(orng.uniform_int(reg.num_classes));
                return model.embed_clip(c, w).watermarked;
              }};
              distorted = overwrite_attack(prepared[i], embs, 3);
              break;
            }
            case DistortionKind::averaging_attack: {
              if (!avg_ready) {
                Rng arng = Rng(spec.seed).derive("avg");
                std::vector<AudioClip> corpus;
                for (size_t k = 0; k < clips.size() &&
                                   k < static_cast<size_t>(opts.averaging_corpus_size);
                     ++k)
                  corpus.push_back(clips[k]);
                avg_delta = compute_average_watermark(
                    [&](const AudioClip& c) {
                      const int w = static_cast<int>(arng.uniform_int(reg.num_classes));
                      return model.embed_clip(c, w).watermarked;
                    },
                    corpus);
                avg_ready = true;
              }
              distorted = averaging_attack(prepared[i], avg_delta);
              break;
            }
            default:
              distorted = distort(prepared[i], spec);
          }
          preds.push_back(decode_argmax(model.detect(distorted)));
        }
        cell.accuracy = accuracy(preds, labels);
        cell.n = static_cast<int>(preds.size());
      } catch (const std::exception& e) {
        cell.status = "skipped";
        cell.accuracy.reset();
        report.meta.push_back("skip " + cell.distortion + "/" + cell.model + ": " + e.what());
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace fakemark
