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

// Command-line front end. Talks to the library exclusively through the
// C API in fakemark/fakemark.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fakemark/fakemark.h"

using nlohmann::json;

namespace {

char g_err[1024];

int fail(int code, const std::string& context) {
  std::fprintf(stderr, "fakemark: %s: %s\n", context.c_str(),
               g_err[0] ? g_err : "unknown error");
  return code == 0 ? 1 : -code;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Reproducibility sidecar: seed, config hash, versions.
void write_run_manifest(const std::string& path, const std::string& command, uint64_t seed,
                        const std::string& config_text) {
  json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = fnv1a(config_text);
  j["version"] = fm_version();
  std::ofstream f(path, std::ios::trunc);
  f << j.dump(2) << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CLI::ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string env_adapters_fallback(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("FAKEMARK_ADAPTERS");
  return env ? env : "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fakemark: artifact-correlated speech watermarking"};
  app.require_subcommand(1);

  // ---- corpus-synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("corpus-synth", "generate the synthetic artifact corpus");
  std::string synth_out;
  int classes = 4, train_n = 200, val_n = 50, test_n = 50;
  double dur_lo = 1.0, dur_hi = 2.0, level_db = -26.0, gain_db = 0.0, jitter = 0.3;
  uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", classes, "number of classes");
  synth->add_option("--train", train_n, "training clips per class");
  synth->add_option("--val", val_n, "validation clips per class");
  synth->add_option("--test", test_n, "test clips per class");
  synth->add_option("--duration-lo", dur_lo, "min clip duration (s)");
  synth->add_option("--duration-hi", dur_hi, "max clip duration (s)");
  synth->add_option("--level-db", level_db, "active speech level (dBov)");
  synth->add_option("--gain-db", gain_db, "post-synthesis level shift (dB)");
  synth->add_option("--jitter", jitter, "artifact amplitude jitter");
  synth->add_option("--seed", synth_seed, "corpus seed");

  // ---- train --------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train generator, message table and detector");
  std::string train_config, train_manifest, train_out, train_variant, train_frontend;
  std::string train_frontend_adapter, train_adapters;
  uint64_t train_seed = 0;
  int64_t train_steps = -1, train_end = -1, train_warmup = -1, train_validate = -1;
  double train_scale = -1, train_peak = -1, train_batch_s = -1;
  bool desk = false;
  train->add_option("--config", train_config, "JSON config file (TrainConfig keys)");
  train->add_option("--manifest", train_manifest, "training manifest");
  train->add_option("--out", train_out, "run directory");
  train->add_flag("--desk", desk, "start from the desk-scale preset");
  train->add_option("--seed", train_seed, "run seed");
  train->add_option("--steps", train_steps, "steps to run (<= end-step)");
  train->add_option("--end-step", train_end, "schedule end step");
  train->add_option("--warmup", train_warmup, "warmup steps");
  train->add_option("--validate-every", train_validate, "validation interval");
  train->add_option("--desk-scale", train_scale, "channel scale factor");
  train->add_option("--peak-lr", train_peak, "peak learning rate");
  train->add_option("--batch-s", train_batch_s, "max batch duration (s)");
  train->add_option("--variant", train_variant, "generator variant: A or T");
  train->add_option("--frontend", train_frontend, "detector front-end: builtin or external");
  train->add_option("--frontend-adapter", train_frontend_adapter, "external SSL adapter command");
  train->add_option("--adapters", train_adapters, "codec adapter config JSON");

  // ---- embed --------------------------------------------------------------------
  auto* embed = app.add_subcommand("embed", "inject a watermark message into a WAV");
  std::string embed_model, embed_in, embed_out, embed_delta;
  int embed_class = 0;
  embed->add_option("--model", embed_model, "checkpoint path")->required();
  embed->add_option("--in", embed_in, "input WAV")->required();
  embed->add_option("--class", embed_class, "message class index")->required();
  embed->add_option("--out", embed_out, "output WAV")->required();
  embed->add_option("--delta", embed_delta, "also write the watermark signal");

  // ---- detect --------------------------------------------------------------------
  auto* detect = app.add_subcommand("detect", "attribute a WAV to a system class");
  std::string det_model, det_in;
  detect->add_option("--model", det_model, "checkpoint path")->required();
  detect->add_option("--in", det_in, "input WAV")->required();

  // ---- bench ----------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "run the distortion/attack evaluation grid");
  std::vector<std::string> bench_models;
  std::vector<std::string> bench_names;
  std::string bench_manifest, bench_out, bench_policy = "matching", bench_adapters;
  std::string bench_distortions = "all";
  uint64_t bench_seed = 0;
  bench->add_option("--model", bench_models, "checkpoint path(s)")->required();
  bench->add_option("--name", bench_names, "display name per model");
  bench->add_option("--manifest", bench_manifest, "test-set manifest")->required();
  bench->add_option("--distortions", bench_distortions,
                    "comma list of none,pitch,speed,noise,codec,vocoder,overwrite,averaging or 'all'");
  bench->add_option("--policy", bench_policy, "none | random | matching");
  bench->add_option("--seed", bench_seed, "grid seed");
  bench->add_option("--adapters", bench_adapters,
                    "adapter config JSON (FAKEMARK_ADAPTERS fallback)");
  bench->add_option("--out", bench_out, "report path")->required();

  // ---- viz ------------------------------------------------------------------------
  auto* viz = app.add_subcommand("viz", "render waveform/spectrogram panels to PNG");
  std::string viz_clean, viz_wm, viz_out;
  viz->add_option("--clean", viz_clean, "clean WAV")->required();
  viz->add_option("--wm", viz_wm, "watermarked WAV")->required();
  viz->add_option("--out", viz_out, "output PNG")->required();

  CLI11_PARSE(app, argc, argv);
  g_err[0] = '\0';

  if (synth->parsed()) {
    json spec;
    spec["num_classes"] = classes;
    spec["train_per_class"] = train_n;
    spec["val_per_class"] = val_n;
    spec["test_per_class"] = test_n;
    spec["duration_lo_s"] = dur_lo;
    spec["duration_hi_s"] = dur_hi;
    spec["level_db"] = level_db;
    spec["gain_db"] = gain_db;
    spec["artifact_jitter"] = jitter;
    spec["seed"] = synth_seed;
    const std::string text = spec.dump();
    const int rc = fm_corpus_synth(text.c_str(), synth_out.c_str(), g_err, sizeof g_err);
    if (rc != FM_OK) return fail(rc, "corpus-synth");
    write_run_manifest(synth_out + "/run_manifest.json", "corpus-synth", synth_seed, text);
    std::printf("corpus written to %s\n", synth_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    // precedence: flags > config file > defaults (desk preset when --desk)
    json cfg = json::parse(
        desk ? R"({"warmup_steps":200,"end_step":5000,"validate_every":500,"max_batch_s":5.0,"desk_scale":0.25})"
             : "{}");
    if (!train_config.empty()) {
      json file_cfg = json::parse(read_file(train_config));
      for (auto it = file_cfg.begin(); it != file_cfg.end(); ++it) cfg[it.key()] = it.value();
    }
    if (!train_manifest.empty()) cfg["manifest_path"] = train_manifest;
    if (!train_out.empty()) cfg["run_dir"] = train_out;
    if (train_seed != 0) cfg["seed"] = train_seed;
    if (train_steps >= 0) cfg["max_steps"] = train_steps;
    if (train_end >= 0) cfg["end_step"] = train_end;
    if (train_warmup >= 0) cfg["warmup_steps"] = train_warmup;
    if (train_validate >= 0) cfg["validate_every"] = train_validate;
    if (train_scale > 0) cfg["desk_scale"] = train_scale;
    if (train_peak > 0) cfg["peak_lr"] = train_peak;
    if (train_batch_s > 0) cfg["max_batch_s"] = train_batch_s;
    if (!train_variant.empty()) cfg["generator_variant"] = train_variant;
    if (!train_frontend.empty()) cfg["frontend_kind"] = train_frontend;
    if (!train_frontend_adapter.empty()) cfg["frontend_adapter"] = train_frontend_adapter;
    const std::string adapters = env_adapters_fallback(train_adapters);
    if (!adapters.empty()) cfg["adapters_path"] = adapters;
    if (!cfg.contains("manifest_path")) {
      std::fprintf(stderr, "fakemark: train: --manifest (or manifest_path in --config) required\n");
      return 1;
    }
    if (!cfg.contains("run_dir")) {
      std::fprintf(stderr, "fakemark: train: --out (or run_dir in --config) required\n");
      return 1;
    }
    const std::string text = cfg.dump();
    const int rc = fm_train(
        text.c_str(),
        [](int64_t step, double total, void*) -> int {
          if (step % 50 == 0) std::printf("step %lld total=%.4f\n",
                                          static_cast<long long>(step), total);
          return 0;
        },
        nullptr, g_err, sizeof g_err);
    if (rc != FM_OK) return fail(rc, "train");
    write_run_manifest(cfg["run_dir"].get<std::string>() + "/run_manifest.json", "train",
                       cfg.value("seed", uint64_t{1}), text);
    std::printf("run complete: %s\n", cfg["run_dir"].get<std::string>().c_str());
    return 0;
  }

  if (embed->parsed()) {
    fm_model* model = fm_model_load(embed_model.c_str(), g_err, sizeof g_err);
    if (!model) return fail(FM_ERR_IO, "embed: load model");
    double sisnr = 0;
    const int rc = fm_embed_file(model, embed_in.c_str(), embed_class, embed_out.c_str(),
                                 embed_delta.empty() ? nullptr : embed_delta.c_str(), &sisnr,
                                 g_err, sizeof g_err);
    fm_model_free(model);
    if (rc != FM_OK) return fail(rc, "embed");
    std::printf("si_snr_db=%.4f\n", sisnr);
    write_run_manifest(embed_out + ".manifest.json", "embed", 0,
                       embed_model + "|" + embed_in + "|" + std::to_string(embed_class));
    return 0;
  }

  if (detect->parsed()) {
    fm_model* model = fm_model_load(det_model.c_str(), g_err, sizeof g_err);
    if (!model) return fail(FM_ERR_IO, "detect: load model");
    const int c = fm_model_num_classes(model);
    std::vector<double> probs(static_cast<size_t>(c));
    int argmax = -1;
    const int rc =
        fm_detect_file(model, det_in.c_str(), probs.data(), c, &argmax, g_err, sizeof g_err);
    if (rc != FM_OK) {
      fm_model_free(model);
      return fail(rc, "detect");
    }
    for (int i = 0; i < c; ++i) {
      const char* name = fm_model_class_name(model, i);
      std::printf("p[%d] %-24s %.6f\n", i, name ? name : "?", probs[static_cast<size_t>(i)]);
    }
    const char* best = fm_model_class_name(model, argmax);
    std::printf("predicted class=%d system=%s\n", argmax, best ? best : "?");
    std::printf("# manifest: version=%s model=%s\n", fm_version(), det_model.c_str());
    fm_model_free(model);
    return 0;
  }

  if (bench->parsed()) {
    json cfg;
    json models = json::array();
    for (size_t i = 0; i < bench_models.size(); ++i) {
      std::string name = i < bench_names.size() ? bench_names[i]
                                                : "model" + std::to_string(i);
      models.push_back({{"name", name}, {"checkpoint", bench_models[i]}});
    }
    cfg["models"] = std::move(models);
    cfg["manifest"] = bench_manifest;
    cfg["policy"] = bench_policy;
    cfg["seed"] = bench_seed;
    cfg["out"] = bench_out;
    const std::string adapters = env_adapters_fallback(bench_adapters);
    if (!adapters.empty()) cfg["adapters"] = adapters;
    if (bench_distortions == "all") {
      cfg["distortions"] = "all";
    } else {
      json list = json::array();
      std::stringstream ss(bench_distortions);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) list.push_back(item);
      cfg["distortions"] = std::move(list);
    }
    const std::string text = cfg.dump();
    const int rc = fm_bench(text.c_str(), g_err, sizeof g_err);
    if (rc != FM_OK) return fail(rc, "bench");
    write_run_manifest(bench_out + ".manifest.json", "bench", bench_seed, text);
    std::ifstream table(bench_out + ".txt");
    std::stringstream ss;
    ss << table.rdbuf();
    std::printf("%s", ss.str().c_str());
    std::printf("report written to %s\n", bench_out.c_str());
    return 0;
  }

  if (viz->parsed()) {
    const int rc = fm_viz(viz_clean.c_str(), viz_wm.c_str(), viz_out.c_str(), g_err, sizeof g_err);
    if (rc != FM_OK) return fail(rc, "viz");
    write_run_manifest(viz_out + ".manifest.json", "viz", 0, viz_clean + "|" + viz_wm);
    std::printf("wrote %s\n", viz_out.c_str());
    return 0;
  }

  return 1;
}
