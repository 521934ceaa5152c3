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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "fakemark/fakemark.h"

namespace fs = std::filesystem;

namespace {

const std::string kRoot = "/tmp/fm_capi";
char err[512];

// one tiny corpus + run shared by the cases below
struct Fixture {
  Fixture() {
    if (fs::exists(kRoot + "/run/ckpt/best")) return;
    fs::remove_all(kRoot);
    REQUIRE(fm_corpus_synth(
                R"({"num_classes":2,"train_per_class":3,"val_per_class":1,"test_per_class":1,
                    "duration_lo_s":0.4,"duration_hi_s":0.6,"seed":7})",
                (kRoot + "/corpus").c_str(), err, sizeof err) == FM_OK);
    const std::string cfg =
        R"({"manifest_path":")" + kRoot + R"(/corpus/manifest.tsv","run_dir":")" + kRoot +
        R"(/run","seed":7,"desk_scale":0.0625,"feature_dim":64,"max_batch_s":1.5,
           "warmup_steps":2,"end_step":50,"max_steps":5,"validate_every":3})";
    REQUIRE(fm_train(cfg.c_str(), nullptr, nullptr, err, sizeof err) == FM_OK);
  }
};

}  // namespace

TEST_CASE("end-to-end through the C API: synth, train, embed, detect, bench, viz") {
  Fixture fx;
  const std::string best = kRoot + "/run/ckpt/best";

  fm_model* model = fm_model_load(best.c_str(), err, sizeof err);
  REQUIRE(model != nullptr);
  CHECK(fm_model_num_classes(model) == 2);
  CHECK(std::string(fm_model_class_name(model, 0)) == "synth-sys-0");
  CHECK(std::string(fm_model_class_name(model, 1)) == "synth-sys-1");
  CHECK(fm_model_class_name(model, 9) == nullptr);

  const std::string in_wav = kRoot + "/corpus/class0/test_0.wav";
  const std::string out_wav = kRoot + "/wm.wav";
  const std::string delta_wav = kRoot + "/delta.wav";
  double sisnr = 0;
  CHECK(fm_embed_file(model, in_wav.c_str(), 1, out_wav.c_str(), delta_wav.c_str(), &sisnr,
                      err, sizeof err) == FM_OK);
  CHECK(fs::exists(out_wav));
  CHECK(fs::exists(delta_wav));
  CHECK(sisnr > 0.0);

  // out-of-range class is an invalid-argument error
  CHECK(fm_embed_file(model, in_wav.c_str(), 7, out_wav.c_str(), nullptr, nullptr, err,
                      sizeof err) != FM_OK);

  double probs[2] = {-1, -1};
  int argmax = -1;
  CHECK(fm_detect_file(model, out_wav.c_str(), probs, 2, &argmax, err, sizeof err) == FM_OK);
  CHECK(probs[0] >= 0.0);
  CHECK(probs[0] <= 1.0);
  CHECK(std::fabs(probs[0] + probs[1] - 1.0) < 1e-6);
  CHECK((argmax == 0 || argmax == 1));
  // buffer too small is rejected
  CHECK(fm_detect_file(model, out_wav.c_str(), probs, 1, &argmax, err, sizeof err) ==
        FM_ERR_INVALID_ARGUMENT);
  fm_model_free(model);

  // bench through the C API; two runs, same seed -> identical reports
  const std::string bench_cfg =
      R"({"models":[{"name":"tiny","checkpoint":")" + best + R"("}],
          "manifest":")" + kRoot + R"(/corpus/manifest.tsv",
          "distortions":["none","speed"],"policy":"matching","seed":11,
          "out":")" + kRoot + R"(/report.txt"})";
  CHECK(fm_bench(bench_cfg.c_str(), err, sizeof err) == FM_OK);
  std::ifstream r1(kRoot + "/report.txt", std::ios::binary);
  std::string report1((std::istreambuf_iterator<char>(r1)), std::istreambuf_iterator<char>());
  CHECK(report1.rfind("#fakemark-report v1\n", 0) == 0);
  CHECK(fm_bench(bench_cfg.c_str(), err, sizeof err) == FM_OK);
  std::ifstream r2(kRoot + "/report.txt", std::ios::binary);
  std::string report2((std::istreambuf_iterator<char>(r2)), std::istreambuf_iterator<char>());
  CHECK(report1 == report2);

  // viz emits a PNG
  const std::string png = kRoot + "/panels.png";
  CHECK(fm_viz(in_wav.c_str(), out_wav.c_str(), png.c_str(), err, sizeof err) == FM_OK);
  std::ifstream p(png, std::ios::binary);
  unsigned char sig[8];
  p.read(reinterpret_cast<char*>(sig), 8);
  CHECK(sig[1] == 'P');
  CHECK(sig[2] == 'N');
  CHECK(sig[3] == 'G');

  // si-snr helper
  double v = 0;
  CHECK(fm_si_snr_files(in_wav.c_str(), in_wav.c_str(), &v, err, sizeof err) == FM_OK);
  CHECK(v == 100.0);
}

TEST_CASE("error paths return codes and messages, not crashes") {
  err[0] = '\0';
  CHECK(fm_model_load("/tmp/does_not_exist.ckpt", err, sizeof err) == nullptr);
  CHECK(std::strlen(err) > 0);

  CHECK(fm_corpus_synth("{\"num_classes\":1}", "/tmp/fm_capi_bad", err, sizeof err) ==
        FM_ERR_INVALID_ARGUMENT);  // fewer than 2 classes

  CHECK(fm_viz("/missing.wav", "/missing.wav", "/tmp/x.png", err, sizeof err) != FM_OK);
  CHECK(fm_train("{", nullptr, nullptr, err, sizeof err) != FM_OK);  // malformed JSON
}
