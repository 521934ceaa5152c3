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

// CLI smoke test: drives the installed binary through every subcommand.
// The binary path comes from the FAKEMARK_CLI compile definition.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kRoot = "/tmp/fm_cli_test";

struct CmdResult {
  int status;
  std::string out;
};

CmdResult run(const std::string& args) {
  const std::string cmd = std::string(FAKEMARK_CLI) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CmdResult res{-1, {}};
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) res.out.append(buf.data(), n);
  res.status = pclose(p);
  return res;
}

}  // namespace

TEST_CASE("cli drives the full workflow") {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);

  auto synth = run("corpus-synth --out " + kRoot +
                   "/corpus --classes 2 --train 3 --val 1 --test 1 "
                   "--duration-lo 0.4 --duration-hi 0.6 --seed 5");
  CHECK(synth.status == 0);
  CHECK(fs::exists(kRoot + "/corpus/manifest.tsv"));
  CHECK(fs::exists(kRoot + "/corpus/run_manifest.json"));

  auto train = run("train --manifest " + kRoot + "/corpus/manifest.tsv --out " + kRoot +
                   "/run --desk --desk-scale 0.0625 --steps 4 --warmup 2 --end-step 50 "
                   "--batch-s 1.5 --validate-every 2 --seed 5");
  CHECK(train.status == 0);
  CHECK(fs::exists(kRoot + "/run/ckpt/best"));
  CHECK(fs::exists(kRoot + "/run/config.snapshot"));
  CHECK(fs::exists(kRoot + "/run/events.log"));
  CHECK(fs::exists(kRoot + "/run/run_manifest.json"));

  auto embed = run("embed --model " + kRoot + "/run/ckpt/best --in " + kRoot +
                   "/corpus/class1/test_0.wav --class 1 --out " + kRoot + "/wm.wav --delta " +
                   kRoot + "/delta.wav");
  CHECK(embed.status == 0);
  CHECK(embed.out.find("si_snr_db=") != std::string::npos);
  CHECK(fs::exists(kRoot + "/wm.wav"));
  CHECK(fs::exists(kRoot + "/delta.wav"));

  // invalid class -> nonzero exit with a message
  auto bad = run("embed --model " + kRoot + "/run/ckpt/best --in " + kRoot +
                 "/corpus/class1/test_0.wav --class 9 --out " + kRoot + "/bad.wav");
  CHECK(bad.status != 0);
  CHECK(bad.out.find("out of range") != std::string::npos);

  auto detect = run("detect --model " + kRoot + "/run/ckpt/best --in " + kRoot + "/wm.wav");
  CHECK(detect.status == 0);
  CHECK(detect.out.find("p[0]") != std::string::npos);
  CHECK(detect.out.find("p[1]") != std::string::npos);
  CHECK(detect.out.find("predicted class=") != std::string::npos);
  CHECK(detect.out.find("synth-sys-") != std::string::npos);

  auto viz = run("viz --clean " + kRoot + "/corpus/class1/test_0.wav --wm " + kRoot +
                 "/wm.wav --out " + kRoot + "/panels.png");
  CHECK(viz.status == 0);
  CHECK(fs::exists(kRoot + "/panels.png"));

  // viz on missing input fails
  CHECK(run("viz --clean /none.wav --wm /none.wav --out " + kRoot + "/x.png").status != 0);

  auto bench = run("bench --model " + kRoot + "/run/ckpt/best --name tiny --manifest " + kRoot +
                   "/corpus/manifest.tsv --distortions none,speed --policy matching --seed 3 "
                   "--out " + kRoot + "/report.txt");
  CHECK(bench.status == 0);
  CHECK(fs::exists(kRoot + "/report.txt"));
  CHECK(fs::exists(kRoot + "/report.txt.manifest.json"));
  std::ifstream rep(kRoot + "/report.txt");
  std::string first;
  std::getline(rep, first);
  CHECK(first == "#fakemark-report v1");

  // unknown flags are rejected
  CHECK(run("detect --model x --in y --bogus-flag 1").status != 0);
  CHECK(run("frobnicate").status != 0);
}
