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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/augment.hpp"
#include "core/corpus.hpp"
#include "core/model.hpp"

namespace fakemark {

// ---- distortions -----------------------------------------------------------------

enum class DistortionKind {
  none,
  pitch,
  speed,
  noise,
  codec_adapter,
  vocoder_adapter,
  overwrite_attack,
  averaging_attack,
};

const char* distortion_name(DistortionKind k);
std::optional<DistortionKind> distortion_from_name(const std::string& name);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::none;
  uint64_t seed = 0;
  // pitch: semitone range; speed: factor range
  double lo = -1.0, hi = 1.0;
  double snr_db = 0.0;                 // noise kind
  std::string adapter_command;         // codec/vocoder kinds; empty -> builtin stub
  std::string label;                   // row name in reports (defaults to kind)

  std::string row_name() const { return label.empty() ? distortion_name(kind) : label; }
};

DistortionSpec pitch_spec(uint64_t seed, double lo_semitones = -1.0, double hi_semitones = 1.0);
DistortionSpec speed_spec(uint64_t seed, double lo = 0.95, double hi = 1.05);
DistortionSpec noise_spec(uint64_t seed, double snr_db = 0.0);

// Deterministic given (input, spec): all randomness derives from spec.seed
// and the clip id. Attack kinds are applied through their dedicated entry
// points below; distort() handles the signal-level kinds.
AudioClip distort(const AudioClip& s_w, const DistortionSpec& spec);

// Time-stretch (duration x stretch) with a phase vocoder; used by pitch.
std::vector<double> phase_vocoder_stretch(const std::vector<double>& x, double stretch);

// ---- removal attacks ---------------------------------------------------------------

using Embedder = std::function<AudioClip(const AudioClip&)>;

// Sequentially applies every embedder `rounds` times.
AudioClip overwrite_attack(const AudioClip& s_w, const std::vector<Embedder>& watermarkers,
                           int rounds);

// Subtracts avg_delta from sample 0; tiles it when shorter than the target.
AudioClip averaging_attack(const AudioClip& s_w, const std::vector<double>& avg_delta);

// Mean of (embed(clip) - clip) over the corpus, truncated to the shortest
// delta before averaging.
std::vector<double> compute_average_watermark(const Embedder& embedder,
                                              const std::vector<AudioClip>& corpus);

// ---- metrics -------------------------------------------------------------------------

// Projection-based SI-SNR in dB, capped at +100. Throws on length mismatch
// or an all-zero reference.
double si_snr(const AudioClip& reference, const AudioClip& estimate);
double si_snr(const std::vector<double>& reference, const std::vector<double>& estimate);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// External quality metrics; {ref}/{deg} command templates, last float on
// stdout is the score. Unconfigured or failing adapters yield nullopt.
enum class QualityMetric { pesq, visqol, pq };
std::optional<double> quality_adapter(QualityMetric metric, const AudioClip& ref,
                                      const AudioClip& deg, const AdapterConfig& adapters);

// ---- grid ----------------------------------------------------------------------------

enum class WatermarkPolicy { none, random, matching };
const char* policy_name(WatermarkPolicy p);
std::optional<WatermarkPolicy> policy_from_name(const std::string& name);

struct BenchCell {
  std::string distortion;
  std::string model;
  std::string policy;
  std::optional<double> accuracy;
  int n = 0;
  std::optional<double> si_snr;
  std::optional<double> pesq, visqol, pq;
  std::string status = "ok";  // ok | skipped
};

struct BenchReport {
  std::vector<std::string> meta;  // '#'-prefixed informational lines
  std::vector<BenchCell> cells;
};

constexpr const char* kReportHeader = "#fakemark-report v1";

std::string serialize_report(const BenchReport& report);
void write_report(const std::string& path, const BenchReport& report);
std::string format_report_table(const BenchReport& report);  // aligned text

struct BenchModel {
  std::string name;
  Model* model;
};

struct GridOptions {
  uint64_t seed = 0;
  WatermarkPolicy policy = WatermarkPolicy::matching;
  AdapterConfig adapters;
  // clips used to build the averaging-attack watermark (default: test set)
  int averaging_corpus_size = 100;
};

// (model x distortion) accuracy grid plus per-model quality columns.
// Per-cell failures mark the cell skipped; the grid always completes.
BenchReport run_grid(const std::vector<BenchModel>& models,
                     const std::vector<DistortionSpec>& distortions, const Manifest& testset,
                     const GridOptions& opts);

}  // namespace fakemark
