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

#include "fakemark/fakemark.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "core/bench.hpp"
#include "core/corpus.hpp"
#include "core/model.hpp"
#include "core/train.hpp"
#include "core/viz.hpp"

using namespace fakemark;
using nlohmann::json;

struct fm_model {
  std::unique_ptr<Model> impl;
};

namespace {

void set_err(char* err, size_t err_len, const std::string& msg) {
  if (!err || err_len == 0) return;
  const size_t n = std::min(err_len - 1, msg.size());
  std::memcpy(err, msg.data(), n);
  err[n] = '\0';
}

template <class Fn>
int guarded(char* err, size_t err_len, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    set_err(err, err_len, e.what());
    return FM_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_err(err, err_len, e.what());
    return FM_ERR_RUNTIME;
  }
}

SyntheticCorpusSpec corpus_spec_from_json(const std::string& text) {
  SyntheticCorpusSpec spec;
  if (text.empty()) return spec;
  json j = json::parse(text);
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  get("num_classes", spec.num_classes);
  get("train_per_class", spec.train_per_class);
  get("val_per_class", spec.val_per_class);
  get("test_per_class", spec.test_per_class);
  get("duration_lo_s", spec.duration_lo_s);
  get("duration_hi_s", spec.duration_hi_s);
  get("seed", spec.seed);
  get("level_db", spec.level_db);
  get("gain_db", spec.gain_db);
  get("artifact_jitter", spec.artifact_jitter);
  return spec;
}

}  // namespace

extern "C" {

const char* fm_version(void) { return "fakemark 1.0.0"; }

int fm_corpus_synth(const char* spec_json, const char* out_dir, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!out_dir) throw std::invalid_argument("out_dir is required");
    SyntheticCorpusSpec spec = corpus_spec_from_json(spec_json ? spec_json : "");
    synth_corpus(spec, out_dir);
    return FM_OK;
  });
}

int fm_train(const char* config_json, fm_progress_fn progress, void* user, char* err,
             size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!config_json) throw std::invalid_argument("config_json is required");
    TrainConfig cfg = train_config_from_json(config_json);
    if (cfg.manifest_path.empty()) throw std::invalid_argument("manifest_path is required");
    Manifest manifest = load_manifest(cfg.manifest_path);
    Trainer trainer(cfg, manifest);
    bool aborted = false;
    trainer.run([&](int64_t step, const StepLosses& l) {
      if (progress && progress(step, l.total, user) != 0 && !aborted) {
        aborted = true;
        throw std::runtime_error("training aborted by caller");
      }
    });
    return FM_OK;
  });
}

fm_model* fm_model_load(const char* checkpoint_path, char* err, size_t err_len) {
  fm_model* out = nullptr;
  guarded(err, err_len, [&] {
    if (!checkpoint_path) throw std::invalid_argument("checkpoint_path is required");
    auto impl = load_checkpoint(checkpoint_path);
    out = new fm_model{std::move(impl)};
    return FM_OK;
  });
  return out;
}

void fm_model_free(fm_model* model) { delete model; }

int fm_model_num_classes(const fm_model* model) {
  return model ? model->impl->num_classes() : 0;
}

const char* fm_model_class_name(const fm_model* model, int class_id) {
  if (!model) return nullptr;
  for (const auto& e : model->impl->registry().entries)
    if (e.class_id == class_id) return e.system_name.c_str();
  return nullptr;
}

int fm_embed_file(fm_model* model, const char* in_wav, int message_class, const char* out_wav,
                  const char* delta_wav, double* si_snr_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!model || !in_wav || !out_wav) throw std::invalid_argument("model/in/out required");
    AudioClip clip = load_wav_canonical(in_wav);
    Model::EmbedResult res = model->impl->embed_clip(clip, message_class);
    save_wav(out_wav, res.watermarked);
    if (delta_wav) save_wav(delta_wav, res.delta);
    if (si_snr_out) *si_snr_out = si_snr(clip, res.watermarked);
    return FM_OK;
  });
}

int fm_detect_file(fm_model* model, const char* in_wav, double* probs, int probs_len,
                   int* argmax_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!model || !in_wav) throw std::invalid_argument("model/in required");
    const int c = model->impl->num_classes();
    if (probs && probs_len < c) throw std::invalid_argument("probs buffer too small");
    ClassProbabilities p = model->impl->detect(load_wav_canonical(in_wav));
    if (probs)
      for (int i = 0; i < c; ++i) probs[i] = p.p[static_cast<size_t>(i)];
    if (argmax_out) *argmax_out = decode_argmax(p);
    return FM_OK;
  });
}

int fm_bench(const char* config_json, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!config_json) throw std::invalid_argument("config_json is required");
    json j = json::parse(config_json);

    std::vector<std::unique_ptr<Model>> owned;
    std::vector<BenchModel> models;
    for (const auto& m : j.at("models")) {
      owned.push_back(load_checkpoint(m.at("checkpoint").get<std::string>()));
      models.push_back({m.at("name").get<std::string>(), owned.back().get()});
    }
    Manifest testset = load_manifest(j.at("manifest").get<std::string>());

    GridOptions opts;
    if (j.contains("seed")) opts.seed = j.at("seed").get<uint64_t>();
    if (j.contains("policy")) {
      auto p = policy_from_name(j.at("policy").get<std::string>());
      if (!p) throw std::invalid_argument("unknown policy");
      opts.policy = *p;
    }
    if (j.contains("adapters") && !j.at("adapters").get<std::string>().empty())
      opts.adapters = load_adapter_config(j.at("adapters").get<std::string>());

    std::vector<DistortionSpec> distortions;
    std::vector<std::string> names;
    if (!j.contains("distortions") || j.at("distortions") == "all")
      names = {"none", "pitch", "speed", "noise", "codec", "vocoder", "overwrite", "averaging"};
    else
      for (const auto& d : j.at("distortions")) names.push_back(d.get<std::string>());
    for (const auto& name : names) {
      auto kind = distortion_from_name(name);
      if (!kind) throw std::invalid_argument("unknown distortion '" + name + "'");
      DistortionSpec spec;
      spec.kind = *kind;
      spec.seed = opts.seed;
      switch (*kind) {
        case DistortionKind::pitch:
          spec.lo = -1.0;
          spec.hi = 1.0;
          break;
        case DistortionKind::speed:
          spec.lo = 0.95;
          spec.hi = 1.05;
          break;
        default:
          break;
      }
      if (j.contains("adapter_commands") && j.at("adapter_commands").contains(name))
        spec.adapter_command = j.at("adapter_commands").at(name).get<std::string>();
      distortions.push_back(std::move(spec));
    }

    BenchReport report = run_grid(models, distortions, testset, opts);
    const std::string out = j.at("out").get<std::string>();
    write_report(out, report);
    std::ofstream table(out + ".txt", std::ios::trunc);
    table << format_report_table(report);
    return FM_OK;
  });
}

int fm_viz(const char* clean_wav, const char* wm_wav, const char* out_png, char* err,
           size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!clean_wav || !wm_wav || !out_png) throw std::invalid_argument("paths required");
    AudioClip clean = load_wav_canonical(clean_wav);
    AudioClip wm = load_wav_canonical(wm_wav);
    write_png(out_png, render_watermark_panels(clean, wm));
    return FM_OK;
  });
}

int fm_si_snr_files(const char* reference_wav, const char* estimate_wav, double* out, char* err,
                    size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!reference_wav || !estimate_wav || !out) throw std::invalid_argument("args required");
    *out = si_snr(load_wav_canonical(reference_wav), load_wav_canonical(estimate_wav));
    return FM_OK;
  });
}

}  // extern "C"
