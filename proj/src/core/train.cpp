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

#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "core/dsp.hpp"

namespace fakemark {

namespace fs = std::filesystem;
using nlohmann::json;

TrainConfig TrainConfig::desk_preset() {
  TrainConfig cfg;
  cfg.warmup_steps = 200;
  cfg.end_step = 5000;
  cfg.validate_every = 500;
  cfg.max_batch_s = 5.0;
  cfg.desk_scale = 0.25;
  cfg.feature_dim = 128;  // scaled by desk_scale inside the detector
  return cfg;
}

double lr_at(int64_t step, const TrainConfig& cfg) {
  if (step <= 0) return 0.0;
  if (step <= cfg.warmup_steps)
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (step >= cfg.end_step) return 0.0;
  return cfg.peak_lr * static_cast<double>(cfg.end_step - step) /
         static_cast<double>(cfg.end_step - cfg.warmup_steps);
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["warmup_steps"] = cfg.warmup_steps;
  j["peak_lr"] = cfg.peak_lr;
  j["end_step"] = cfg.end_step;
  j["validate_every"] = cfg.validate_every;
  j["max_batch_s"] = cfg.max_batch_s;
  j["trim_lo_s"] = cfg.trim_lo_s;
  j["trim_hi_s"] = cfg.trim_hi_s;
  j["seed"] = cfg.seed;
  j["generator_variant"] = std::string(1, cfg.generator_variant);
  j["frontend_kind"] = cfg.frontend_kind;
  j["frontend_adapter"] = cfg.frontend_adapter;
  j["feature_dim"] = cfg.feature_dim;
  j["desk_scale"] = cfg.desk_scale;
  j["asl_target_db"] = cfg.asl_target_db;
  j["asl_jitter_db"] = cfg.asl_jitter_db;
  j["max_steps"] = cfg.max_steps;
  j["manifest_path"] = cfg.manifest_path;
  j["run_dir"] = cfg.run_dir;
  j["adapters_path"] = cfg.adapters_path;
  j["weights"] = {{"attribution", cfg.weights.attribution},
                  {"detection", cfg.weights.detection},
                  {"hifigan", cfg.weights.hifigan},
                  {"mel_inner", cfg.weights.mel_inner},
                  {"feat_match_inner", cfg.weights.feat_match_inner},
                  {"wm_l1", cfg.weights.wm_l1},
                  {"loudness", cfg.weights.loudness},
                  {"freq_mag", cfg.weights.freq_mag}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j = json::parse(text);
  TrainConfig cfg;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  get("warmup_steps", cfg.warmup_steps);
  get("peak_lr", cfg.peak_lr);
  get("end_step", cfg.end_step);
  get("validate_every", cfg.validate_every);
  get("max_batch_s", cfg.max_batch_s);
  get("trim_lo_s", cfg.trim_lo_s);
  get("trim_hi_s", cfg.trim_hi_s);
  get("seed", cfg.seed);
  if (j.contains("generator_variant"))
    cfg.generator_variant = j.at("generator_variant").get<std::string>().at(0);
  get("frontend_kind", cfg.frontend_kind);
  get("frontend_adapter", cfg.frontend_adapter);
  get("feature_dim", cfg.feature_dim);
  get("desk_scale", cfg.desk_scale);
  get("asl_target_db", cfg.asl_target_db);
  get("asl_jitter_db", cfg.asl_jitter_db);
  get("max_steps", cfg.max_steps);
  get("manifest_path", cfg.manifest_path);
  get("run_dir", cfg.run_dir);
  get("adapters_path", cfg.adapters_path);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    auto getw = [&](const char* key, double& dst) {
      if (w.contains(key)) dst = w.at(key).get<double>();
    };
    getw("attribution", cfg.weights.attribution);
    getw("detection", cfg.weights.detection);
    getw("hifigan", cfg.weights.hifigan);
    getw("mel_inner", cfg.weights.mel_inner);
    getw("feat_match_inner", cfg.weights.feat_match_inner);
    getw("wm_l1", cfg.weights.wm_l1);
    getw("loudness", cfg.weights.loudness);
    getw("freq_mag", cfg.weights.freq_mag);
  }
  return cfg;
}

namespace {

// Straight-through node: forward takes the transformed samples, backward
// copies the gradient to the pre-transform signal (linear time rescale when
// the transform changed the length).
Var straight_through(Tape& t, Var src, std::vector<double> transformed) {
  const int64_t n_out = static_cast<int64_t>(transformed.size());
  Tensor val({n_out}, std::move(transformed));
  Var o = t.make(std::move(val), src->needs_grad);
  if (o->needs_grad)
    o->back = [src, o] {
      Tensor& gs = src->g();
      const int64_t n_src = gs.numel();
      const int64_t n_out = o->grad.numel();
      if (n_src == n_out) {
        for (int64_t i = 0; i < n_src; ++i) gs[i] += o->grad[i];
        return;
      }
      const double ratio = static_cast<double>(n_out) / static_cast<double>(n_src);
      for (int64_t i = 0; i < n_src; ++i) {
        const double pos = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        const int64_t lo = static_cast<int64_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        double g = 0;
        if (lo >= 0 && lo < n_out) g += (1 - frac) * o->grad[lo];
        if (lo + 1 >= 0 && lo + 1 < n_out) g += frac * o->grad[lo + 1];
        gs[i] += g;
      }
    };
  return o;
}

ModelConfig model_config_from_train(const TrainConfig& cfg) {
  ModelConfig mc;
  mc.variant = cfg.generator_variant;
  mc.desk_scale = cfg.desk_scale;
  mc.seed = cfg.seed;
  mc.frontend.kind = cfg.frontend_kind == "external"
                         ? FrontEndSpec::Kind::external_ssl_adapter
                         : FrontEndSpec::Kind::builtin_conv;
  mc.frontend.feature_dim =
      mc.frontend.kind == FrontEndSpec::Kind::external_ssl_adapter ? 1024 : cfg.feature_dim;
  mc.frontend.adapter_command = cfg.frontend_adapter;
  mc.apply_desk_scale();
  return mc;
}

SystemRegistry registry_from_manifest(const Manifest& manifest) {
  auto names = manifest.system_names();
  std::map<std::string, std::string> identity;
  for (const auto& n : names) identity[n] = n;
  SystemRegistry reg = group_systems(names, identity);
  const int n_bits = std::max(1, static_cast<int>(std::ceil(
                                     std::log2(std::max(2, reg.num_classes)))));
  return assign_bits(reg, n_bits, nullptr, 0);
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg, const Manifest& manifest)
    : Trainer(cfg, manifest, nullptr) {}

Trainer::Trainer(const TrainConfig& cfg, const Manifest& manifest, std::unique_ptr<Model> model)
    : cfg_(cfg), manifest_(manifest), run_rng_(cfg.seed) {
  registry_ = model ? model->registry() : registry_from_manifest(manifest);
  model_ = model ? std::move(model)
                 : std::make_unique<Model>(model_config_from_train(cfg), registry_);
  if (!cfg.adapters_path.empty()) adapters_ = load_adapter_config(cfg.adapters_path);

  // load audio up front; desk corpora are small enough to keep resident
  auto load_split = [&](const char* split, std::vector<LoadedClip>& dst) {
    for (const auto& rec : manifest_.records) {
      if (rec.split != split) continue;
      AudioClip clip = load_wav_canonical(manifest_.root + "/" + rec.path);
      const RegistryEntry* e = registry_.find(rec.system_name);
      if (!e) throw std::runtime_error("train: system '" + rec.system_name + "' not in registry");
      dst.push_back({std::move(clip.samples), e->class_id, rec.path});
    }
  };
  load_split("train", train_clips_);
  load_split("val", val_clips_);
  if (train_clips_.empty()) throw std::runtime_error("train: no training clips in manifest");

  if (!cfg_.run_dir.empty()) {
    fs::create_directories(cfg_.run_dir);
    fs::create_directories(cfg_.run_dir + "/ckpt");
    std::ofstream snap(cfg_.run_dir + "/config.snapshot", std::ios::trunc);
    snap << train_config_to_json(cfg_);
    std::ofstream ev(cfg_.run_dir + "/events.log", std::ios::trunc);
  }
}

void Trainer::build_epoch() {
  Rng erng = run_rng_.derive("epoch").derive(static_cast<uint64_t>(epoch_));
  std::vector<int> order(train_clips_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<size_t>(erng.uniform_int(static_cast<int64_t>(i)))]);

  // trim + amplitude-randomize, then group similar durations into batches
  struct Prepared {
    LoadedClip clip;
    double dur;
  };
  std::vector<Prepared> prepared;
  const int64_t min_len = model_->min_generator_samples();
  for (int idx : order) {
    const auto& src = train_clips_[static_cast<size_t>(idx)];
    AudioClip c;
    c.samples = src.samples;
    c.sample_rate = kCanonicalRate;
    c.id = src.id;
    c = trim_random(c, cfg_.trim_lo_s, cfg_.trim_hi_s, erng);
    const double target =
        cfg_.asl_target_db + erng.uniform(-cfg_.asl_jitter_db, cfg_.asl_jitter_db);
    AslResult asl = asl_normalize(c, target);
    if (asl.clip.length() < min_len) continue;  // too short for the generator
    prepared.push_back({{std::move(asl.clip.samples), src.label, src.id},
                        static_cast<double>(0)});
    prepared.back().dur = static_cast<double>(prepared.back().clip.samples.size()) /
                          kCanonicalRate;
  }
  std::stable_sort(prepared.begin(), prepared.end(),
                   [](const Prepared& a, const Prepared& b) { return a.dur < b.dur; });

  epoch_batches_.clear();
  std::vector<LoadedClip> cur;
  double cur_max = 0;
  for (auto& p : prepared) {
    const double new_max = std::max(cur_max, p.dur);
    if (!cur.empty() && new_max * static_cast<double>(cur.size() + 1) > cfg_.max_batch_s) {
      epoch_batches_.push_back(std::move(cur));
      cur.clear();
      cur_max = 0;
    }
    cur_max = std::max(cur_max, p.dur);
    cur.push_back(std::move(p.clip));
  }
  if (!cur.empty()) epoch_batches_.push_back(std::move(cur));

  // shuffle batch order so duration buckets interleave
  for (size_t i = epoch_batches_.size(); i > 1; --i)
    std::swap(epoch_batches_[i - 1],
              epoch_batches_[static_cast<size_t>(erng.uniform_int(static_cast<int64_t>(i)))]);
  epoch_pos_ = 0;
  ++epoch_;
}

StepLosses Trainer::step() {
  if (epoch_pos_ >= epoch_batches_.size()) build_epoch();
  if (epoch_batches_.empty()) throw std::runtime_error("train: empty epoch");
  const auto& batch = epoch_batches_[epoch_pos_++];
  ++step_;

  Rng srng = run_rng_.derive("step").derive(static_cast<uint64_t>(step_));
  StepLosses losses;
  losses.augmentation = sample_transform(srng);

  for (Param* p : model_->all_params()) p->zero_grad();

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const int c_classes = model_->num_classes();
  for (const auto& clip : batch) {
    Tape t;
    // pass 1: attribution on the clean, unwatermarked signal
    Var att = cross_entropy_logits(
        t, model_->detector().logits(t, clip.samples), clip.label);

    // pass 2: random message, watermark, one augmentation, detection
    const int w = static_cast<int>(srng.uniform_int(c_classes));
    GeneratorOutput gen = model_->generate(t, clip.samples, w);

    AudioClip wm_clip;
    wm_clip.samples = gen.watermarked->val.vec();
    wm_clip.sample_rate = kCanonicalRate;
    wm_clip.id = clip.id;
    TransformResult aug = apply_transform(losses.augmentation, wm_clip, srng, adapters_);
    losses.augmentation_substituted |= aug.substituted_identity;
    Var s_w_aug = straight_through(t, gen.watermarked, std::move(aug.clip.samples));
    Var det = cross_entropy_logits(t, model_->detector_logits_wave(t, s_w_aug), w);

    // perceptual losses on (s, s_w, delta)
    Var s_const = t.constant(Tensor({static_cast<int64_t>(clip.samples.size())}, clip.samples));
    Var mel = mel_recon_loss(t, s_const, gen.watermarked);
    AdversarialLosses advl = adversarial_losses(t, s_const, gen.watermarked,
                                                model_->discriminators());
    Var wm_l1 = wm_l1_loss(t, gen.delta);
    Var loud = loudness_loss(t, gen.delta, s_const);
    Var freq = freq_mag_loss(t, gen.delta, s_const);

    Var clip_total = total_loss(t, att, det, mel, advl.feat_match, advl.gen_adv, wm_l1, loud,
                                freq, cfg_.weights);
    // the discriminator objective shares the tape; parameters are disjoint
    Var root = scale(t, add(t, clip_total, advl.disc_loss), inv_b);
    if (!std::isfinite(root->val.item()))
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step_) +
                               " on clip '" + clip.id + "'");
    t.backward(root);

    losses.attribution += att->val.item() * inv_b;
    losses.detection += det->val.item() * inv_b;
    losses.mel += mel->val.item() * inv_b;
    losses.feat_match += advl.feat_match->val.item() * inv_b;
    losses.adv += advl.gen_adv->val.item() * inv_b;
    losses.wm_l1 += wm_l1->val.item() * inv_b;
    losses.loudness += loud->val.item() * inv_b;
    losses.freq_mag += freq->val.item() * inv_b;
    losses.disc += advl.disc_loss->val.item() * inv_b;
  }

  LossComponents comp;
  comp.attribution = losses.attribution;
  comp.detection = losses.detection;
  comp.mel = losses.mel;
  comp.feat_match = losses.feat_match;
  comp.adv = losses.adv;
  comp.wm_l1 = losses.wm_l1;
  comp.loudness = losses.loudness;
  comp.freq_mag = losses.freq_mag;
  losses.total = total_loss(comp, cfg_.weights);

  const double lr = lr_at(step_, cfg_);
  auto main_params = model_->trainable_params();
  auto disc_params = model_->discriminator_params();
  opt_main_.step(main_params, lr);
  opt_disc_.step(disc_params, lr);

  append_event(losses, lr);
  return losses;
}

double Trainer::validate() {
  if (val_clips_.empty()) return 0.0;
  const int64_t min_len = model_->min_generator_samples();
  double att_sum = 0, det_sum = 0;
  int64_t n = 0;
  for (const auto& clip : val_clips_) {
    if (static_cast<int64_t>(clip.samples.size()) < min_len) continue;
    Tape t;
    Var att = cross_entropy_logits(t, model_->detector().logits(t, clip.samples), clip.label);
    GeneratorOutput gen = model_->generate(t, clip.samples, clip.label);  // matching policy
    Var det = cross_entropy_logits(t, model_->detector_logits_wave(t, gen.watermarked),
                                   clip.label);
    att_sum += att->val.item();
    det_sum += det->val.item();
    ++n;
  }
  return n > 0 ? (att_sum + det_sum) / static_cast<double>(n) : 0.0;
}

void Trainer::save_best_and_last() {
  if (cfg_.run_dir.empty()) return;
  CheckpointMeta meta;
  meta.step = step_;
  meta.best_score = best_score_;
  meta.config_snapshot = train_config_to_json(cfg_);
  save_checkpoint(cfg_.run_dir + "/ckpt/last", *model_, meta);
}

void Trainer::run(const std::function<void(int64_t, const StepLosses&)>& on_step) {
  const int64_t total = cfg_.steps_to_run();
  while (step_ < total) {
    StepLosses l = step();
    if (on_step) on_step(step_, l);
    if (cfg_.validate_every > 0 && step_ % cfg_.validate_every == 0) {
      const double score = validate();
      if (!cfg_.run_dir.empty()) {
        std::ofstream ev(cfg_.run_dir + "/events.log", std::ios::app);
        char buf[128];
        std::snprintf(buf, sizeof buf, "step=%lld validate score=%.6f best=%.6f",
                      static_cast<long long>(step_), score, std::min(score, best_score_));
        ev << buf << "\n";
      }
      if (score < best_score_) {
        best_score_ = score;
        if (!cfg_.run_dir.empty()) {
          CheckpointMeta meta;
          meta.step = step_;
          meta.best_score = best_score_;
          meta.config_snapshot = train_config_to_json(cfg_);
          save_checkpoint(cfg_.run_dir + "/ckpt/best", *model_, meta);
        }
      }
      save_best_and_last();
    }
  }
  save_best_and_last();
  if (!cfg_.run_dir.empty() && !fs::exists(cfg_.run_dir + "/ckpt/best")) {
    CheckpointMeta meta;
    meta.step = step_;
    meta.best_score = best_score_;
    meta.config_snapshot = train_config_to_json(cfg_);
    save_checkpoint(cfg_.run_dir + "/ckpt/best", *model_, meta);
  }
}

void Trainer::append_event(const StepLosses& l, double lr) {
  if (cfg_.run_dir.empty()) return;
  std::ofstream ev(cfg_.run_dir + "/events.log", std::ios::app);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "step=%lld lr=%.8g att=%.6f det=%.6f mel=%.6f fm=%.6f adv=%.6f disc=%.6f "
                "wm_l1=%.6f loud=%.6f freq=%.6f total=%.6f aug=%s%s",
                static_cast<long long>(step_), lr, l.attribution, l.detection, l.mel,
                l.feat_match, l.adv, l.disc, l.wm_l1, l.loudness, l.freq_mag, l.total,
                transform_name(l.augmentation),
                l.augmentation_substituted ? " aug_substituted=1" : "");
  ev << buf << "\n";
}

}  // namespace fakemark
