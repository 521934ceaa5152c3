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

#include "core/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "core/dsp.hpp"

namespace fakemark {

namespace fs = std::filesystem;

// ---- registry -------------------------------------------------------------------

const RegistryEntry* SystemRegistry::find(const std::string& system_name) const {
  for (const auto& e : entries)
    if (e.system_name == system_name) return &e;
  return nullptr;
}

std::vector<int> SystemRegistry::class_bits(int class_id) const {
  for (const auto& e : entries)
    if (e.class_id == class_id) return e.bits;
  throw std::out_of_range("registry: unknown class id " + std::to_string(class_id));
}

std::string SystemRegistry::class_name(int class_id) const {
  for (const auto& e : entries)
    if (e.class_id == class_id) return e.system_name;
  throw std::out_of_range("registry: unknown class id " + std::to_string(class_id));
}

void SystemRegistry::validate() const {
  std::vector<std::vector<int>> per_class(static_cast<size_t>(num_classes));
  std::vector<bool> seen(static_cast<size_t>(num_classes), false);
  for (const auto& e : entries) {
    if (e.class_id < 0 || e.class_id >= num_classes)
      throw std::logic_error("registry: class id out of range");
    if (static_cast<int>(e.bits.size()) != bits_len)
      throw std::logic_error("registry: bits length mismatch for " + e.system_name);
    auto& ref = per_class[static_cast<size_t>(e.class_id)];
    if (!seen[static_cast<size_t>(e.class_id)]) {
      ref = e.bits;
      seen[static_cast<size_t>(e.class_id)] = true;
    } else if (ref != e.bits) {
      throw std::logic_error("registry: conflicting bits within class");
    }
  }
  for (bool s : seen)
    if (!s) throw std::logic_error("registry: class ids not contiguous");
  if (bits_len > 0) {
    std::set<std::vector<int>> uniq(per_class.begin(), per_class.end());
    if (uniq.size() != per_class.size())
      throw std::logic_error("registry: duplicate bit codes across classes");
    if (num_classes > (1 << bits_len))
      throw std::logic_error("registry: 2^n < C");
  }
}

SystemRegistry group_systems(const std::vector<std::string>& raw_names,
                             const std::map<std::string, std::string>& grouping) {
  SystemRegistry reg;
  std::map<std::string, int> arch_to_class;
  for (const auto& name : raw_names) {
    auto it = grouping.find(name);
    if (it == grouping.end())
      throw std::invalid_argument("group_systems: no grouping entry for '" + name + "'");
    const std::string& arch = it->second;
    auto [cit, inserted] = arch_to_class.try_emplace(arch, reg.num_classes);
    if (inserted) ++reg.num_classes;
    reg.entries.push_back({name, cit->second, {}});
  }
  reg.bits_len = 0;
  return reg;
}

SystemRegistry assign_bits(const SystemRegistry& reg, int n,
                           const std::map<int, std::vector<int>>* fixed, uint64_t seed) {
  if (n < 1 || n > 30) throw std::invalid_argument("assign_bits: bad bit length");
  if ((1ll << n) < reg.num_classes)
    throw std::invalid_argument("assign_bits: capacity exceeded (2^n < C)");
  SystemRegistry out = reg;
  out.bits_len = n;
  std::map<int, std::vector<int>> table;
  if (fixed) {
    table = *fixed;
    for (int c = 0; c < reg.num_classes; ++c)
      if (!table.count(c))
        throw std::invalid_argument("assign_bits: fixed table misses class " +
                                    std::to_string(c));
    out.bits_seed.reset();
  } else {
    // seeded permutation of all 2^n codes; seed recorded for reproducibility
    std::vector<int64_t> codes(static_cast<size_t>(1ll << n));
    std::iota(codes.begin(), codes.end(), 0);
    Rng rng = Rng(seed).derive("assign-bits");
    for (size_t i = codes.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i + 1)));
      std::swap(codes[i], codes[j]);
    }
    for (int c = 0; c < reg.num_classes; ++c) {
      std::vector<int> bits(static_cast<size_t>(n));
      for (int b = 0; b < n; ++b)
        bits[static_cast<size_t>(b)] = static_cast<int>((codes[static_cast<size_t>(c)] >> (n - 1 - b)) & 1);
      table[c] = std::move(bits);
    }
    out.bits_seed = seed;
  }
  for (auto& e : out.entries) e.bits = table.at(e.class_id);
  out.validate();
  return out;
}

namespace {

struct MlaadRow {
  const char* name;
  const char* arch;
  int class_id;
  int bits[4];
};

// MLAAD_v5 source-tracing protocol: 24 systems, 12 architecture classes,
// fixed 4-bit codes.
const MlaadRow kMlaadRows[] = {
    {"Mars5", "mars5", 0, {0, 1, 0, 0}},
    {"MeloTTS", "melotts", 1, {0, 0, 1, 0}},
    {"Metavoice-1B", "metavoice", 2, {1, 1, 1, 0}},
    {"facebook-mms-tts-deu", "mms-tts", 3, {1, 1, 0, 0}},
    {"tts_models-en-ljspeech-fast_pitch", "fastpitch", 4, {1, 0, 1, 1}},
    {"tts_models-it-mai_female-glow-tts", "glowtts", 5, {1, 0, 1, 0}},
    {"griffin_lim", "griffin_lim", 6, {0, 1, 1, 1}},
    {"suno-bark", "bark", 7, {0, 0, 0, 1}},
    {"suno-bark-small", "bark", 7, {0, 0, 0, 1}},
    {"tts_models-en-ljspeech-tacotron2-DCA", "tacotron2", 8, {1, 1, 1, 1}},
    {"tts_models-fr-mai-tacotron2-DDC", "tacotron2", 8, {1, 1, 1, 1}},
    {"tts_models-de-thorsten-tacotron2-DDC", "tacotron2", 8, {1, 1, 1, 1}},
    {"tts_models-en-ljspeech-tacotron2-DDC", "tacotron2", 8, {1, 1, 1, 1}},
    {"tts_models-en-ljspeech-tacotron2-DDC_ph", "tacotron2", 8, {1, 1, 1, 1}},
    {"tts_models-en-ljspeech-speedy-speech", "speedyspeech", 9, {1, 0, 0, 0}},
    {"tts_models-it-mai_male-vits", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-fr-css10-vits", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-it-mai_female-vits", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-lt-cv-vits", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-de-css10-vits-neon", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-en-ljspeech-vits--neon", "vits", 10, {0, 0, 1, 1}},
    {"tts_models-multilingual-multi-dataset-xtts_v2", "xtts", 11, {1, 1, 0, 1}},
    {"tts_models-multilingual-multi-dataset-xtts_v1.1", "xtts", 11, {1, 1, 0, 1}},
    {"vixTTS", "xtts", 11, {1, 1, 0, 1}},
};

struct CrossRow {
  const char* model;
  const char* dataset;
  int class_id;
  int bits[4];
};

const CrossRow kCrossRows[] = {
    {"A01-GlowTTS", "ASVspoof5", 5, {1, 0, 1, 0}},
    {"A07-FastPitch", "ASVspoof5", 4, {1, 0, 1, 1}},
    {"fastpitch", "TIMIT-TTS", 4, {1, 0, 1, 1}},
    {"glowtts", "TIMIT-TTS", 5, {1, 0, 1, 0}},
    {"A11-Tacotron2", "ASVspoof5", 8, {1, 1, 1, 1}},
    {"A29-XTTS", "ASVspoof5", 11, {1, 1, 0, 1}},
    {"A08-VITS", "ASVspoof5", 10, {0, 0, 1, 1}},
    {"vits", "TIMIT-TTS", 10, {0, 0, 1, 1}},
};

}  // namespace

const std::vector<std::string>& mlaad_system_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& r : kMlaadRows) v.emplace_back(r.name);
    return v;
  }();
  return names;
}

const std::map<std::string, std::string>& mlaad_grouping() {
  static const std::map<std::string, std::string> g = [] {
    std::map<std::string, std::string> m;
    for (const auto& r : kMlaadRows) m[r.name] = r.arch;
    return m;
  }();
  return g;
}

const std::map<int, std::vector<int>>& mlaad_bit_table() {
  static const std::map<int, std::vector<int>> t = [] {
    std::map<int, std::vector<int>> m;
    for (const auto& r : kMlaadRows)
      m[r.class_id] = {r.bits[0], r.bits[1], r.bits[2], r.bits[3]};
    return m;
  }();
  return t;
}

SystemRegistry mlaad_registry() {
  SystemRegistry reg = group_systems(mlaad_system_names(), mlaad_grouping());
  return assign_bits(reg, 4, &mlaad_bit_table());
}

const std::vector<CrossDatasetEntry>& cross_dataset_table() {
  static const std::vector<CrossDatasetEntry> t = [] {
    std::vector<CrossDatasetEntry> v;
    for (const auto& r : kCrossRows)
      v.push_back({r.model, r.dataset, r.class_id, {r.bits[0], r.bits[1], r.bits[2], r.bits[3]}});
    return v;
  }();
  return t;
}

// ---- manifest -------------------------------------------------------------------

std::vector<ManifestRecord> Manifest::split(const std::string& name) const {
  std::vector<ManifestRecord> out;
  for (const auto& r : records)
    if (r.split == name) out.push_back(r);
  return out;
}

std::vector<std::string> Manifest::system_names() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.system_name).second) out.push_back(r.system_name);
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path);
  Manifest m;
  m.root = fs::path(path).parent_path().string();
  std::string line;
  int lineno = 0;
  std::set<std::string> ids;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kManifestHeader)
        throw std::runtime_error("manifest: missing '" + std::string(kManifestHeader) +
                                 "' header in " + path);
      header_seen = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 4)
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": expected 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
    ManifestRecord r;
    r.path = fields[0];
    r.system_name = fields[1];
    r.split = fields[2];
    if (r.split != "train" && r.split != "val" && r.split != "test")
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": unknown split '" + r.split + "'");
    try {
      size_t used = 0;
      r.duration_s = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": bad duration '" + fields[3] + "'");
    }
    if (r.duration_s <= 0)
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": duration must be > 0");
    if (!ids.insert(r.path).second)
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": duplicate clip id '" + r.path + "'");
    m.records.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("manifest: empty file " + path);
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("manifest: cannot write " + path);
  f << kManifestHeader << "\n";
  char buf[64];
  for (const auto& r : m.records) {
    std::snprintf(buf, sizeof buf, "%.6f", r.duration_s);
    f << r.path << '\t' << r.system_name << '\t' << r.split << '\t' << buf << "\n";
  }
}

// ---- synthetic corpus ----------------------------------------------------------------

void SyntheticCorpusSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("corpus spec: num_classes must be >= 2");
  if (duration_lo_s <= 0 || duration_hi_s < duration_lo_s)
    throw std::invalid_argument("corpus spec: bad duration range");
  if (!recipes.empty()) {
    if (static_cast<int>(recipes.size()) != num_classes)
      throw std::invalid_argument("corpus spec: recipe count != num_classes");
    for (size_t i = 0; i < recipes.size(); ++i)
      for (size_t j = i + 1; j < recipes.size(); ++j)
        if (recipes[i] == recipes[j])
          throw std::invalid_argument("corpus spec: recipes must be pairwise distinct");
  }
}

std::vector<ArtifactRecipe> default_recipes(int num_classes) {
  // Bands sit above the carrier's 1.8 kHz lowpass so band energy is artifact
  // energy; comb periods add class-specific ripple texture inside the
  // carrier band.
  std::vector<ArtifactRecipe> out;
  const int combs[] = {24, 34, 46, 62, 28, 40, 54, 70, 22, 32, 44, 58};
  for (int c = 0; c < num_classes; ++c) {
    ArtifactRecipe r;
    const double span = 6600.0 - 3000.0;
    r.band_center_hz = 3000.0 + span * (num_classes == 1 ? 0.5 : static_cast<double>(c) /
                                                                     (num_classes - 1));
    r.band_width_hz = 700.0;
    r.comb_period = combs[c % 12] + 96 * (c / 12);
    r.comb_gain = 0.3;
    r.noise_amp = 0.12;
    out.push_back(r);
  }
  return out;
}

namespace {

// Speech-like carrier: resonant noise bursts separated by pauses, with a
// raised-cosine envelope per burst. Returns samples and the envelope.
void synth_carrier(int64_t len, int sample_rate, Rng& rng, std::vector<double>& x,
                   std::vector<double>& env) {
  x.assign(static_cast<size_t>(len), 0.0);
  env.assign(static_cast<size_t>(len), 0.0);
  int64_t pos = static_cast<int64_t>(rng.uniform(0.0, 0.05) * sample_rate);
  while (pos < len) {
    const int64_t burst = static_cast<int64_t>(rng.uniform(0.08, 0.35) * sample_rate);
    const int64_t gap = static_cast<int64_t>(rng.uniform(0.05, 0.25) * sample_rate);
    const double f0 = rng.uniform(300.0, 1500.0);
    const double q = rng.uniform(1.5, 4.0);
    const double gain = rng.uniform(0.35, 1.0);

    // resonator biquad (RBJ constant-peak bandpass)
    const double w0 = 2.0 * 3.14159265358979323846 * f0 / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1 + alpha;
    const double b0 = alpha / a0, b2 = -alpha / a0;
    const double a1 = -2 * std::cos(w0) / a0, a2 = (1 - alpha) / a0;

    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    const int64_t ramp = std::min<int64_t>(burst / 4, sample_rate / 100);
    for (int64_t i = 0; i < burst && pos + i < len; ++i) {
      const double w = rng.normal(0.0, 1.0);
      double y = b0 * w + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = w;
      y2 = y1;
      y1 = y;
      double e = gain;
      if (i < ramp) e *= 0.5 - 0.5 * std::cos(3.14159265358979323846 * i / ramp);
      if (burst - i < ramp)
        e *= 0.5 - 0.5 * std::cos(3.14159265358979323846 * (burst - i) / ramp);
      const size_t idx = static_cast<size_t>(pos + i);
      x[idx] += y * e;
      env[idx] = std::max(env[idx], e);
    }
    pos += burst + gap;
  }
  // keep the carrier inside the speech band so artifact bands above it
  // carry only artifact energy
  auto lp = dsp::butterworth_lowpass(8, 1800.0, sample_rate);
  x = dsp::sosfilt(lp, x);
  // soften the resonator output level
  double rms = 0;
  for (double v : x) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(len));
  if (rms > 1e-9)
    for (double& v : x) v *= 0.15 / rms;
}

void apply_recipe(std::vector<double>& x, const std::vector<double>& env,
                  const ArtifactRecipe& r, double amp_scale, int sample_rate, Rng& rng) {
  const int64_t len = static_cast<int64_t>(x.size());
  // comb ringing on the carrier itself
  if (r.comb_gain != 0 && r.comb_period > 0) {
    std::vector<double> orig = x;
    for (int64_t i = r.comb_period; i < len; ++i)
      x[static_cast<size_t>(i)] += r.comb_gain * orig[static_cast<size_t>(i - r.comb_period)];
  }
  // band-limited noise bed shaped by the speech envelope
  const double active = std::sqrt(std::max(dsp::active_speech_power(x, sample_rate), 1e-12));
  const double lo = std::max(50.0, r.band_center_hz - r.band_width_hz / 2);
  const double hi = std::min(sample_rate / 2.0 - 100.0, r.band_center_hz + r.band_width_hz / 2);
  auto hp = dsp::butterworth_highpass(4, lo, sample_rate);
  auto lp = dsp::butterworth_lowpass(4, hi, sample_rate);
  std::vector<double> noise(static_cast<size_t>(len));
  for (auto& v : noise) v = rng.normal(0.0, 1.0);
  noise = dsp::sosfilt(hp, noise);
  noise = dsp::sosfilt(lp, noise);
  double nrms = 0;
  for (double v : noise) nrms += v * v;
  nrms = std::sqrt(nrms / static_cast<double>(len));
  if (nrms < 1e-12) return;
  const double target = active * r.noise_amp * amp_scale;
  for (int64_t i = 0; i < len; ++i)
    x[static_cast<size_t>(i)] += noise[static_cast<size_t>(i)] / nrms * target *
                                 std::min(1.0, env[static_cast<size_t>(i)] * 3.0);
}

uint64_t clip_tag(int class_id, const std::string& split, int index) {
  uint64_t s = split == "train" ? 1 : split == "val" ? 2 : 3;
  return (static_cast<uint64_t>(class_id) << 40) | (s << 32) | static_cast<uint64_t>(index);
}

}  // namespace

AudioClip synth_clip(const SyntheticCorpusSpec& spec, int class_id, const std::string& split,
                     int index) {
  spec.validate();
  const auto recipes = spec.recipes.empty() ? default_recipes(spec.num_classes) : spec.recipes;
  Rng rng = Rng(spec.seed).derive("synth-clip").derive(clip_tag(class_id, split, index));
  const double dur = rng.uniform(spec.duration_lo_s, spec.duration_hi_s);
  const int64_t len = std::max<int64_t>(static_cast<int64_t>(dur * spec.sample_rate), 1024);

  std::vector<double> x, env;
  synth_carrier(len, spec.sample_rate, rng, x, env);
  const double jitter =
      1.0 + rng.uniform(-spec.artifact_jitter, spec.artifact_jitter);
  apply_recipe(x, env, recipes[static_cast<size_t>(class_id)], jitter, spec.sample_rate, rng);

  // set the active level, then the optional corpus-wide shift
  const double p = dsp::active_speech_power(x, spec.sample_rate);
  double gain = 1.0;
  if (p > 0) gain = std::sqrt(dsp::power_from_db(spec.level_db) / p);
  gain *= std::pow(10.0, spec.gain_db / 20.0);
  for (double& v : x) v = std::clamp(v * gain, -0.999, 0.999);

  AudioClip clip;
  clip.samples = std::move(x);
  clip.sample_rate = spec.sample_rate;
  clip.id = "class" + std::to_string(class_id) + "/" + split + "_" + std::to_string(index);
  clip.label = class_id;
  return clip;
}

Manifest synth_corpus(const SyntheticCorpusSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  if (!fs::is_directory(out_dir))
    throw std::runtime_error("synth_corpus: cannot create directory " + out_dir);

  Manifest m;
  m.root = out_dir;
  const struct {
    const char* name;
    int count;
  } splits[] = {{"train", spec.train_per_class},
                {"val", spec.val_per_class},
                {"test", spec.test_per_class}};
  for (int c = 0; c < spec.num_classes; ++c) {
    const std::string cls_dir = out_dir + "/class" + std::to_string(c);
    fs::create_directories(cls_dir);
    for (const auto& sp : splits) {
      for (int i = 0; i < sp.count; ++i) {
        AudioClip clip = synth_clip(spec, c, sp.name, i);
        const std::string rel = "class" + std::to_string(c) + "/" + sp.name + "_" +
                                std::to_string(i) + ".wav";
        save_wav(out_dir + "/" + rel, clip);
        m.records.push_back({rel, "synth-sys-" + std::to_string(c), sp.name,
                             clip.duration_s()});
      }
    }
  }
  save_manifest(out_dir + "/manifest.tsv", m);
  return m;
}

int oracle_classify(const AudioClip& clip, const std::vector<ArtifactRecipe>& recipes) {
  // Long-term spectrum, then per-recipe band-energy density. Bands sit above
  // the carrier lowpass, so the density at the true class's band dominates.
  int64_t nfft = 1;
  while (nfft < clip.length() && nfft < 1 << 16) nfft <<= 1;
  auto spec = dsp::rfft(clip.samples.data(), clip.length(), nfft);
  std::vector<double> power(spec.size());
  double total = 1e-30;
  for (size_t k = 0; k < spec.size(); ++k) {
    power[k] = std::norm(spec[k]);
    total += power[k];
  }
  const double bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(nfft);

  int best = 0;
  double best_score = -1e300;
  for (size_t c = 0; c < recipes.size(); ++c) {
    const auto& r = recipes[c];
    const double lo = r.band_center_hz - r.band_width_hz / 2;
    const double hi = r.band_center_hz + r.band_width_hz / 2;
    double band = 0;
    int64_t bins = 0;
    for (size_t k = 0; k < power.size(); ++k) {
      const double f = bin_hz * static_cast<double>(k);
      if (f >= lo && f <= hi) {
        band += power[k];
        ++bins;
      }
    }
    const double score = bins > 0 ? band / total / static_cast<double>(bins) : -1e300;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// ---- amplitude + batching ------------------------------------------------------------

AslResult asl_normalize(const AudioClip& clip, double target_level_db) {
  clip.validate();
  AslResult res;
  res.clip = clip;
  const double p = dsp::active_speech_power(clip.samples, clip.sample_rate);
  if (p <= 0) {
    res.silence_flagged = true;
    res.level_db = -120.0;
    return res;
  }
  res.level_db = dsp::db_from_power(p);
  res.gain = std::sqrt(dsp::power_from_db(target_level_db) / p);
  for (double& v : res.clip.samples) v *= res.gain;
  return res;
}

std::vector<DurationBatch> batch_by_duration(const Manifest& m, const std::string& split,
                                             double max_total_s) {
  std::vector<int> idx;
  for (size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].split == split) idx.push_back(static_cast<int>(i));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& ra = m.records[static_cast<size_t>(a)];
    const auto& rb = m.records[static_cast<size_t>(b)];
    return ra.duration_s != rb.duration_s ? ra.duration_s < rb.duration_s : a < b;
  });
  for (int i : idx)
    if (m.records[static_cast<size_t>(i)].duration_s > max_total_s)
      throw std::invalid_argument("batch_by_duration: clip '" +
                                  m.records[static_cast<size_t>(i)].path +
                                  "' exceeds the batch cap");
  std::vector<DurationBatch> out;
  DurationBatch cur;
  double cur_max = 0;
  for (int i : idx) {
    const double d = m.records[static_cast<size_t>(i)].duration_s;
    const double new_max = std::max(cur_max, d);
    const double padded = new_max * static_cast<double>(cur.indices.size() + 1);
    if (!cur.indices.empty() && padded > max_total_s) {
      cur.padded_duration_s = cur_max * static_cast<double>(cur.indices.size());
      out.push_back(std::move(cur));
      cur = DurationBatch{};
      cur_max = 0;
    }
    cur.indices.push_back(i);
    cur_max = std::max(cur_max, d);
  }
  if (!cur.indices.empty()) {
    cur.padded_duration_s = cur_max * static_cast<double>(cur.indices.size());
    out.push_back(std::move(cur));
  }
  return out;
}

AudioClip trim_random(const AudioClip& clip, double lo_s, double hi_s, Rng& rng) {
  const double dur = clip.duration_s();
  if (dur <= lo_s) return clip;
  const double hi = std::min(hi_s, dur);
  const double target = rng.uniform(lo_s, hi);
  const int64_t want = std::max<int64_t>(1, static_cast<int64_t>(target * clip.sample_rate));
  const int64_t len = std::min<int64_t>(want, clip.length());
  const int64_t max_start = clip.length() - len;
  const int64_t start = max_start > 0 ? rng.uniform_int(max_start + 1) : 0;
  AudioClip out = clip;
  out.samples.assign(clip.samples.begin() + start, clip.samples.begin() + start + len);
  return out;
}

}  // namespace fakemark
