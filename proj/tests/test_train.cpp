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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/train.hpp"

using namespace fakemark;
namespace fs = std::filesystem;

namespace {

// Tiny corpus + config so training steps run in milliseconds.
struct TinyRun {
  std::string dir;
  Manifest manifest;
  TrainConfig cfg;
};

TinyRun make_tiny_run(const std::string& name, uint64_t seed = 3) {
  TinyRun r;
  r.dir = "/tmp/fm_tiny_" + name;
  fs::remove_all(r.dir);
  SyntheticCorpusSpec spec;
  spec.num_classes = 2;
  spec.train_per_class = 3;
  spec.val_per_class = 1;
  spec.test_per_class = 1;
  spec.duration_lo_s = 0.30;
  spec.duration_hi_s = 0.45;
  spec.seed = seed;
  r.manifest = synth_corpus(spec, r.dir);

  r.cfg = TrainConfig::desk_preset();
  r.cfg.seed = seed;
  r.cfg.desk_scale = 0.0625;
  r.cfg.feature_dim = 64;
  r.cfg.max_batch_s = 1.0;
  r.cfg.warmup_steps = 10;
  r.cfg.end_step = 100;
  r.cfg.validate_every = 0;
  r.cfg.manifest_path = r.dir + "/manifest.tsv";
  return r;
}

}  // namespace

TEST_CASE("lr schedule: exact anchors and piecewise linearity") {
  TrainConfig cfg;  // defaults: warmup 2000, peak 1e-4, end 50000
  CHECK(lr_at(2000, cfg) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(26000, cfg) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_at(50000, cfg) == 0.0);
  CHECK(lr_at(60000, cfg) == 0.0);
  CHECK(lr_at(0, cfg) == 0.0);
  CHECK(lr_at(1000, cfg) == doctest::Approx(5e-5));

  // continuity at the warmup boundary
  const double before = lr_at(1999, cfg);
  const double at = lr_at(2000, cfg);
  const double after = lr_at(2001, cfg);
  CHECK(std::fabs(at - before) < 1e-7);
  CHECK(std::fabs(after - at) < 1e-7);
  CHECK(at >= before);
  CHECK(after <= at);

  // peak is exactly at warmup_steps
  for (int64_t s : {1, 500, 1500, 2000, 3000, 30000, 49999})
    CHECK(lr_at(s, cfg) <= at + 1e-18);
}

TEST_CASE("train_step: zero loss weights leave parameters unchanged") {
  TinyRun r = make_tiny_run("zerow");
  r.cfg.weights = LossWeights{0, 0, 0, 0, 0, 0, 0, 0};
  Trainer trainer(r.cfg, r.manifest);
  std::vector<Tensor> before;
  for (Param* p : trainer.model().trainable_params()) before.push_back(p->w);
  trainer.step();
  auto params = trainer.model().trainable_params();
  double diff = 0;
  for (size_t i = 0; i < params.size(); ++i)
    for (int64_t j = 0; j < params[i]->w.numel(); ++j)
      diff += std::fabs(params[i]->w[j] - before[i][j]);
  CHECK(diff == 0.0);  // update norm is exactly zero
}

TEST_CASE("training determinism: identical loss trajectories for two runs") {
  TinyRun a = make_tiny_run("det");
  const int steps = 12;
  std::vector<double> traj1, traj2;
  {
    Trainer t1(a.cfg, a.manifest);
    for (int i = 0; i < steps; ++i) traj1.push_back(t1.step().total);
  }
  {
    Trainer t2(a.cfg, a.manifest);
    for (int i = 0; i < steps; ++i) traj2.push_back(t2.step().total);
  }
  REQUIRE(traj1.size() == traj2.size());
  for (size_t i = 0; i < traj1.size(); ++i) CHECK(traj1[i] == traj2[i]);  // bitwise
}

TEST_CASE("validation: uniform-output model scores 2 log C") {
  TinyRun r = make_tiny_run("val");
  Trainer trainer(r.cfg, r.manifest);
  // zero-initialized head -> uniform probabilities on both passes
  const double score = trainer.validate();
  CHECK(score == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("checkpoint: bit-exact round trip on a probe forward pass") {
  TinyRun r = make_tiny_run("ckpt");
  Trainer trainer(r.cfg, r.manifest);
  for (int i = 0; i < 3; ++i) trainer.step();  // leave initialization

  AudioClip probe;
  probe.sample_rate = 16000;
  probe.id = "probe";
  probe.samples.resize(6400);
  Rng rng(5);
  for (auto& v : probe.samples) v = rng.normal(0.0, 0.1);

  auto before_embed = trainer.model().embed_clip(probe, 1);
  auto before_probs = trainer.model().detect(probe);

  const std::string path = "/tmp/fm_ckpt_roundtrip";
  CheckpointMeta meta;
  meta.step = trainer.current_step();
  meta.best_score = 1.25;
  meta.config_snapshot = train_config_to_json(r.cfg);
  save_checkpoint(path, trainer.model(), meta);

  CheckpointMeta back;
  auto loaded = load_checkpoint(path, &back);
  CHECK(back.step == trainer.current_step());
  CHECK(back.best_score == 1.25);

  auto after_embed = loaded->embed_clip(probe, 1);
  auto after_probs = loaded->detect(probe);
  REQUIRE(after_embed.watermarked.samples.size() == before_embed.watermarked.samples.size());
  for (size_t i = 0; i < after_embed.watermarked.samples.size(); ++i)
    CHECK(after_embed.watermarked.samples[i] == before_embed.watermarked.samples[i]);
  for (size_t i = 0; i < after_probs.p.size(); ++i)
    CHECK(after_probs.p[i] == before_probs.p[i]);
}

TEST_CASE("checkpoint: version mismatch and corruption are explicit errors") {
  TinyRun r = make_tiny_run("ckpt2");
  Trainer trainer(r.cfg, r.manifest);
  const std::string path = "/tmp/fm_ckpt_bad";
  CheckpointMeta meta;
  meta.config_snapshot = "{}";
  save_checkpoint(path, trainer.model(), meta);

  // corrupt one payload byte -> CRC failure, no partial load
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char c;
    f.seekg(200);
    f.get(c);
    f.seekp(200);
    f.put(static_cast<char>(c ^ 0x5a));
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_checkpoint(path)),
                       doctest::Contains("CRC"), std::runtime_error);

  // version mismatch
  save_checkpoint(path, trainer.model(), meta);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const uint32_t v = 999;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_checkpoint(path)),
                       doctest::Contains("version"), std::runtime_error);

  // bad magic
  {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    f << "garbage";
  }
  CHECK_THROWS(static_cast<void>(load_checkpoint(path)));
}

TEST_CASE("run dir layout: config snapshot, events log, checkpoints") {
  TinyRun r = make_tiny_run("rundir");
  r.cfg.run_dir = "/tmp/fm_rundir_test";
  fs::remove_all(r.cfg.run_dir);
  r.cfg.max_steps = 4;
  r.cfg.validate_every = 2;
  Trainer trainer(r.cfg, r.manifest);
  trainer.run();
  CHECK(fs::exists(r.cfg.run_dir + "/config.snapshot"));
  CHECK(fs::exists(r.cfg.run_dir + "/ckpt/best"));
  CHECK(fs::exists(r.cfg.run_dir + "/ckpt/last"));

  // events.log carries step, lr and every loss component per line
  std::ifstream ev(r.cfg.run_dir + "/events.log");
  std::string line;
  std::getline(ev, line);
  for (const char* key : {"step=", "lr=", "att=", "det=", "mel=", "fm=", "adv=", "disc=",
                          "wm_l1=", "loud=", "freq=", "total="})
    CHECK(line.find(key) != std::string::npos);

  // config snapshot round-trips
  std::ifstream snap(r.cfg.run_dir + "/config.snapshot");
  std::string text((std::istreambuf_iterator<char>(snap)), std::istreambuf_iterator<char>());
  TrainConfig parsed = train_config_from_json(text);
  CHECK(parsed.max_steps == 4);
  CHECK(parsed.desk_scale == doctest::Approx(0.0625));
}

TEST_CASE("best checkpoint score is non-increasing across validations") {
  TinyRun r = make_tiny_run("best");
  r.cfg.run_dir = "/tmp/fm_rundir_best";
  fs::remove_all(r.cfg.run_dir);
  r.cfg.max_steps = 6;
  r.cfg.validate_every = 2;
  Trainer trainer(r.cfg, r.manifest);
  std::vector<double> bests;
  trainer.run([&](int64_t step, const StepLosses&) {
    if (step % 2 == 0) bests.push_back(trainer.best_score());
  });
  for (size_t i = 1; i < bests.size(); ++i) CHECK(bests[i] <= bests[i - 1]);
}
