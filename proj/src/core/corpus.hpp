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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/rng.hpp"

namespace fakemark {

// ---- system registry ----------------------------------------------------------

struct RegistryEntry {
  std::string system_name;
  int class_id = -1;
  std::vector<int> bits;  // empty until assigned
};

// Mapping between system names, contiguous class ids and assigned bitstrings.
struct SystemRegistry {
  std::vector<RegistryEntry> entries;
  int num_classes = 0;
  int bits_len = 0;
  std::optional<uint64_t> bits_seed;  // recorded for seeded-permutation mode

  const RegistryEntry* find(const std::string& system_name) const;
  std::vector<int> class_bits(int class_id) const;
  std::string class_name(int class_id) const;  // first system of the class
  void validate() const;
};

// C = number of distinct architectures; class ids in first-appearance order.
// Throws on names missing from the grouping map.
SystemRegistry group_systems(const std::vector<std::string>& raw_names,
                             const std::map<std::string, std::string>& grouping);

// Distinct n-bit codes per class. If `fixed` is given it is used verbatim
// (Table-4 mode); otherwise codes come from a seeded permutation of all
// 2^n codes and the seed is recorded in the registry.
SystemRegistry assign_bits(const SystemRegistry& reg, int n,
                           const std::map<int, std::vector<int>>* fixed = nullptr,
                           uint64_t seed = 0);

// Built-in tables for the MLAAD_v5 protocol: 24 TTS systems grouped into 12
// classes with fixed 4-bit codes, plus the cross-dataset rows.
const std::vector<std::string>& mlaad_system_names();                // 24 names
const std::map<std::string, std::string>& mlaad_grouping();          // name -> architecture
const std::map<int, std::vector<int>>& mlaad_bit_table();            // class -> 4 bits
SystemRegistry mlaad_registry();                                     // grouped + bits

struct CrossDatasetEntry {
  std::string model;
  std::string source_dataset;
  int class_id;
  std::vector<int> bits;
};
const std::vector<CrossDatasetEntry>& cross_dataset_table();

// ---- manifest -------------------------------------------------------------------

struct ManifestRecord {
  std::string path;  // relative to root
  std::string system_name;
  std::string split;  // train | val | test
  double duration_s = 0;
};

struct Manifest {
  std::string root;
  std::vector<ManifestRecord> records;

  std::vector<ManifestRecord> split(const std::string& name) const;
  std::vector<std::string> system_names() const;  // unique, first-appearance order
};

constexpr const char* kManifestHeader = "#fakemark-manifest v1";

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

// ---- synthetic corpus ---------------------------------------------------------------

// Per-class artifact recipe: a vocoder-style comb ringing plus a
// band-limited noise bed riding on the speech envelope.
struct ArtifactRecipe {
  double band_center_hz = 2000;
  double band_width_hz = 500;
  int comb_period = 32;      // samples
  double comb_gain = 0.3;
  double noise_amp = 0.08;   // relative to carrier active RMS

  bool operator==(const ArtifactRecipe&) const = default;
};

struct SyntheticCorpusSpec {
  int num_classes = 4;
  int train_per_class = 200;
  int val_per_class = 50;
  int test_per_class = 50;
  double duration_lo_s = 1.0;
  double duration_hi_s = 2.0;
  uint64_t seed = 1;
  int sample_rate = kCanonicalRate;
  double level_db = -26.0;        // active speech level of generated clips
  double gain_db = 0.0;           // extra shift applied after synthesis
  double artifact_jitter = 0.3;   // per-clip multiplicative amplitude jitter
  std::vector<ArtifactRecipe> recipes;  // defaulted per class when empty

  void validate() const;
};

std::vector<ArtifactRecipe> default_recipes(int num_classes);

// Generates WAV files under out_dir and returns the manifest (also written
// to out_dir/manifest.tsv). Regeneration with the same spec is byte-identical.
Manifest synth_corpus(const SyntheticCorpusSpec& spec, const std::string& out_dir);

// Renders one clip without touching the filesystem.
AudioClip synth_clip(const SyntheticCorpusSpec& spec, int class_id, const std::string& split,
                     int index);

// Analytic label oracle: band-energy score against each recipe. Used to
// prove the synthetic classes are separable independently of any detector.
int oracle_classify(const AudioClip& clip, const std::vector<ArtifactRecipe>& recipes);

// ---- amplitude + batching ------------------------------------------------------------

struct AslResult {
  AudioClip clip;
  double gain = 1.0;
  double level_db = 0;  // measured active level before gain
  bool silence_flagged = false;
};

// Simplified P.56: active frames are 20 ms frames within 30 dB of the
// loudest frame; the gain moves their RMS level to target_level_db.
AslResult asl_normalize(const AudioClip& clip, double target_level_db);

struct DurationBatch {
  std::vector<int> indices;    // into manifest records
  double padded_duration_s = 0;
};

// Sort-by-duration greedy packing; padded duration of a batch is
// max-clip-duration times batch size. Throws when a clip exceeds the cap.
std::vector<DurationBatch> batch_by_duration(const Manifest& m, const std::string& split,
                                             double max_total_s);

// Clips at or below lo_s pass through; longer clips are cut to a uniform
// duration in [lo_s, min(hi_s, len)] at a uniform start offset.
AudioClip trim_random(const AudioClip& clip, double lo_s, double hi_s, Rng& rng);

}  // namespace fakemark
