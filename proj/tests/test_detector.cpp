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
#include <fstream>

#include "core/detector.hpp"
#include "helpers.hpp"

using namespace fakemark;
namespace to = testing_oracles;

namespace {

std::vector<double> noise(int64_t n, uint64_t seed, double sd = 0.1) {
  Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.normal(0.0, sd);
  return x;
}

Detector tiny_detector(int classes = 4) {
  FrontEndSpec spec;
  spec.desk_scale = 0.125;
  spec.feature_dim = 64;
  Rng rng(1);
  return Detector(spec, classes, rng);
}

}  // namespace

TEST_CASE("builtin features: 20 ms hop frame count and finiteness") {
  Detector det = tiny_detector();
  Tape t;
  Var f = det.features(t, noise(16000, 2));
  CHECK(f->val.dim(1) == 50);  // 1 s at 320-sample hop

  // zero clip stays finite
  Tape t2;
  Var f0 = det.features(t2, std::vector<double>(8000, 0.0));
  CHECK(f0->val.all_finite());

  CHECK_THROWS(det.features(t, std::vector<double>(100, 0.0)));
}

TEST_CASE("classify: softmax output over C classes") {
  Detector det = tiny_detector(12);
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.id = "x";
  clip.samples = noise(8000, 3);
  ClassProbabilities p = det.classify(clip);
  REQUIRE(p.p.size() == 12);
  p.validate();
  // zero-initialized head -> equal logits -> uniform distribution
  for (double v : p.p) CHECK(v == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("mean pooling: duplicating every frame leaves p unchanged") {
  Detector det = tiny_detector(5);
  Rng rng(7);
  Tensor feats({det.frontend().scaled_feature_dim(), 6});
  for (int64_t i = 0; i < feats.numel(); ++i) feats[i] = rng.normal();
  // give the head non-trivial weights
  for (Param* p : det.params())
    if (p->name == "det.head.w")
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = rng.normal();

  Tensor doubled({feats.dim(0), 12});
  for (int64_t c = 0; c < feats.dim(0); ++c)
    for (int64_t i = 0; i < 6; ++i) {
      doubled.at(c, 2 * i) = feats.at(c, i);
      doubled.at(c, 2 * i + 1) = feats.at(c, i);
    }
  auto p1 = det.classify_features(feats);
  auto p2 = det.classify_features(doubled);
  for (size_t i = 0; i < p1.p.size(); ++i) CHECK(p1.p[i] == doctest::Approx(p2.p[i]));
}

TEST_CASE("decode_argmax: documented tie-breaks and the brute-force oracle") {
  CHECK(decode_argmax({{0.1, 0.7, 0.2}}) == 1);
  CHECK(decode_argmax({{0.25, 0.25, 0.25, 0.25}}) == 0);  // lowest index wins
  Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const int c = 2 + static_cast<int>(rng.uniform_int(10));
    std::vector<double> raw(static_cast<size_t>(c));
    for (auto& v : raw) v = rng.uniform();
    double sum = 0;
    for (double v : raw) sum += v;
    ClassProbabilities p;
    for (double v : raw) p.p.push_back(v / sum);
    int best = 0;  // independent max scan
    for (int i = 1; i < c; ++i)
      if (p.p[static_cast<size_t>(i)] > p.p[static_cast<size_t>(best)]) best = i;
    CHECK(decode_argmax(p) == best);
  }
}

TEST_CASE("argmax is invariant under strictly monotone logit transforms") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(6);
    for (auto& v : logits) v = rng.normal(0.0, 2.0);
    auto p1 = softmax_probabilities(logits);
    std::vector<double> warped(6);
    for (size_t i = 0; i < 6; ++i) warped[i] = 3.0 * logits[i] + 1.5;  // monotone
    auto p2 = softmax_probabilities(warped);
    CHECK(decode_argmax(p1) == decode_argmax(p2));
  }
}

TEST_CASE("decode_hamming: registry rows, tie-break, exhaustive oracle") {
  SystemRegistry reg = mlaad_registry();
  CHECK(decode_hamming({1, 1, 0, 0}, reg) == 3);  // exact match
  CHECK(decode_hamming({0, 1, 0, 1}, reg) == 0);  // distance-1 tie -> lowest id

  // all 16 inputs match the exhaustive nearest-code oracle
  std::vector<std::vector<int>> codes;
  for (int c = 0; c < reg.num_classes; ++c) codes.push_back(reg.class_bits(c));
  for (int v = 0; v < 16; ++v) {
    std::vector<int> bits{(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1};
    CHECK(decode_hamming(bits, reg) == to::brute_force_hamming(bits, codes));
  }

  CHECK_THROWS(decode_hamming({1, 0, 1}, reg));
}

TEST_CASE("decode_hamming equals the oracle over random registries") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(4));  // 3..6 bits
    const int c = 2 + static_cast<int>(rng.uniform_int((1 << n) - 1));
    std::vector<std::string> names;
    std::map<std::string, std::string> grouping;
    for (int i = 0; i < c; ++i) {
      names.push_back("sys" + std::to_string(i));
      grouping[names.back()] = names.back();
    }
    SystemRegistry reg = assign_bits(group_systems(names, grouping), n, nullptr,
                                     rng.next_u64());
    std::vector<std::vector<int>> codes;
    for (int cc = 0; cc < c; ++cc) codes.push_back(reg.class_bits(cc));
    for (int v = 0; v < (1 << n); ++v) {
      std::vector<int> bits(static_cast<size_t>(n));
      for (int b = 0; b < n; ++b) bits[static_cast<size_t>(b)] = (v >> (n - 1 - b)) & 1;
      CHECK(decode_hamming(bits, reg) == to::brute_force_hamming(bits, codes));
    }
  }
}

TEST_CASE("probabilities sum to one for arbitrary finite features") {
  Detector det = tiny_detector(7);
  Rng rng(19);
  for (Param* p : det.params())
    if (p->name == "det.head.w")
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = rng.normal(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor feats({det.frontend().scaled_feature_dim(), 1 + rng.uniform_int(20)});
    for (int64_t i = 0; i < feats.numel(); ++i) feats[i] = rng.normal(0.0, 5.0);
    auto p = det.classify_features(feats);
    p.validate();
  }
}

TEST_CASE("external SSL adapter contract (fixture subprocess)") {
  // Fixture adapter: reads WAV on stdin, emits [frames][dim] header plus
  // f32 features; implemented with python stdlib only.
  const char* fixture = R"PY(
import struct, sys, wave, io
data = sys.stdin.buffer.read()
w = wave.open(io.BytesIO(data), 'rb')
n = w.getnframes()
frames = max(1, n // 320)
dim = 1024
sys.stdout.buffer.write(struct.pack('<ii', frames, dim))
row = struct.pack('<' + 'f' * dim, *([0.5] * dim))
for _ in range(frames):
    sys.stdout.buffer.write(row)
)PY";
  const std::string script = "/tmp/fm_ssl_fixture.py";
  {
    std::ofstream f(script, std::ios::trunc);
    f << fixture;
  }
  FrontEndSpec spec;
  spec.kind = FrontEndSpec::Kind::external_ssl_adapter;
  spec.feature_dim = 1024;
  spec.adapter_command = "python3 " + script;
  Rng rng(23);
  Detector det(spec, 12, rng);

  AudioClip clip;
  clip.sample_rate = 16000;
  clip.id = "ext";
  clip.samples = noise(16000, 29);
  Tensor feats = det.features_external(clip);
  CHECK(feats.dim(0) == 1024);  // feature_dim from the adapter
  CHECK(feats.dim(1) == 50);
  CHECK(feats.all_finite());

  auto p = det.classify(clip);
  REQUIRE(p.p.size() == 12);
  p.validate();

  // nonzero exit -> failure surfaces as an exception
  FrontEndSpec bad = spec;
  bad.adapter_command = "exit 3";
  Detector det_bad(bad, 12, rng);
  CHECK_THROWS(det_bad.features_external(clip));
}
