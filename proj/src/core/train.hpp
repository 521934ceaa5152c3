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
#include <memory>
#include <string>

#include "core/augment.hpp"
#include "core/corpus.hpp"
#include "core/model.hpp"

namespace fakemark {

struct TrainConfig {
  int64_t warmup_steps = 2000;
  double peak_lr = 1e-4;
  int64_t end_step = 50000;
  int64_t validate_every = 500;
  double max_batch_s = 40.0;
  double trim_lo_s = 6.0;
  double trim_hi_s = 10.0;
  LossWeights weights;
  uint64_t seed = 1;
  char generator_variant = 'A';
  std::string frontend_kind = "builtin";  // builtin | external
  std::string frontend_adapter;
  int feature_dim = 128;
  double desk_scale = 1.0;
  double asl_target_db = -26.0;
  double asl_jitter_db = 3.0;
  int64_t max_steps = 0;  // 0 -> end_step
  std::string manifest_path;
  std::string run_dir;
  std::string adapters_path;

  int64_t steps_to_run() const { return max_steps > 0 ? max_steps : end_step; }

  // Scaled-down preset: 4-class synthetic corpus, quarter channels,
  // 5000-step schedule with 200-step warmup.
  static TrainConfig desk_preset();
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

// Warmup then linear decay: peak*step/warmup below warmup, then
// peak*(end-step)/(end-warmup) down to exactly 0 at end_step and beyond.
double lr_at(int64_t step, const TrainConfig& cfg);

struct StepLosses {
  double attribution = 0, detection = 0, mel = 0, feat_match = 0, adv = 0;
  double wm_l1 = 0, loudness = 0, freq_mag = 0, disc = 0, total = 0;
  TransformKind augmentation = TransformKind::identity;
  bool augmentation_substituted = false;
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Manifest& manifest);
  Trainer(const TrainConfig& cfg, const Manifest& manifest, std::unique_ptr<Model> model);

  StepLosses step();             // one optimization step on the next batch
  double validate();             // att CE (clean) + det CE (matching w)
  void run(const std::function<void(int64_t, const StepLosses&)>& on_step = nullptr);

  Model& model() { return *model_; }
  int64_t current_step() const { return step_; }
  double best_score() const { return best_score_; }
  const TrainConfig& config() const { return cfg_; }

  // run-dir artifacts (<run>/config.snapshot, events.log, ckpt/best, ckpt/last)
  void save_best_and_last();

 private:
  struct LoadedClip {
    std::vector<double> samples;
    int label = 0;
    std::string id;
  };
  void build_epoch();
  const LoadedClip* next_clip_batch(std::vector<const LoadedClip*>& batch);
  void append_event(const StepLosses& l, double lr);

  TrainConfig cfg_;
  Manifest manifest_;
  SystemRegistry registry_;
  std::unique_ptr<Model> model_;
  AdapterConfig adapters_;
  AdamOpt opt_main_, opt_disc_;
  Rng run_rng_;
  int64_t step_ = 0;
  double best_score_ = 1e300;
  int64_t epoch_ = 0;

  std::vector<LoadedClip> train_clips_;  // raw, unnormalized
  std::vector<LoadedClip> val_clips_;
  // per-epoch schedule: prepared (trimmed+normalized) clips grouped in batches
  std::vector<std::vector<LoadedClip>> epoch_batches_;
  size_t epoch_pos_ = 0;
};

}  // namespace fakemark
