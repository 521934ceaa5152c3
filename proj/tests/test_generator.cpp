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

#include "core/bench.hpp"
#include "core/dsp.hpp"
#include "core/generator.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace fakemark;
namespace to = testing_oracles;

namespace {

std::vector<double> sine(double freq, int64_t n, double amp = 1.0) {
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    x[static_cast<size_t>(i)] = amp * std::sin(2 * 3.14159265358979323846 * freq * i / 16000.0);
  return x;
}

std::vector<double> noise(int64_t n, uint64_t seed, double sd = 0.1) {
  Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.normal(0.0, sd);
  return x;
}

GeneratorConfigA tiny_cfg_a() {
  GeneratorConfigA cfg;
  cfg.desk_scale = 0.0625;  // 2 base channels, latent 8
  return cfg;
}

}  // namespace

TEST_CASE("vad_mask basics") {
  std::vector<double> zeros(3200, 0.0);
  auto m0 = vad_mask(zeros, 320);
  CHECK(m0.size() == 10);
  for (double v : m0) CHECK(v == 0.0);

  auto s = sine(440, 32000, 1.0);  // full-scale sine: every frame RMS 0.707
  auto m1 = vad_mask(s, 320);
  CHECK(m1.size() == 100);  // 2 s at alpha 320 -> floor(32000/320)
  for (double v : m1) CHECK(v == 1.0);

  CHECK_THROWS(vad_mask(std::vector<double>(100, 0.0), 320));
}

TEST_CASE("vad_mask separates speech frames from deep silence") {
  // loud first half, silent second half
  std::vector<double> x = sine(500, 16000, 0.5);
  x.resize(32000, 0.0);
  auto m = vad_mask(x, 320);
  REQUIRE(m.size() == 100);
  CHECK(m[10] == 1.0);
  CHECK(m[80] == 0.0);
}

TEST_CASE("fuse: masked rows keep the carrier latent exactly") {
  Rng rng(9);
  Tape t;
  Tensor hs({4, 6}), ew({4, 6}), mask({6});
  for (int64_t i = 0; i < hs.numel(); ++i) hs[i] = rng.normal();
  for (int64_t i = 0; i < ew.numel(); ++i) ew[i] = rng.normal();
  for (int64_t i = 0; i < 6; ++i) mask[i] = i % 2 == 0 ? 1.0 : 0.0;
  Var h = t.constant(hs);
  Var e = t.constant(ew);

  // all-zero mask -> output equals H_s elementwise
  Var z = fuse(t, h, e, Tensor::zeros({6}));
  for (int64_t i = 0; i < hs.numel(); ++i) CHECK(z->val[i] == hs[i]);

  // all-one mask -> H_s + E_w
  Var o = fuse(t, h, e, Tensor::full({6}, 1.0));
  for (int64_t i = 0; i < hs.numel(); ++i) CHECK(o->val[i] == doctest::Approx(hs[i] + ew[i]));

  // random mask: rows where m=0 equal H_s (elementwise oracle)
  Var f = fuse(t, h, e, mask);
  for (int64_t r = 0; r < 4; ++r)
    for (int64_t c = 0; c < 6; ++c) {
      const double expect = hs.at(r, c) + mask[c] * ew.at(r, c);
      CHECK(f->val.at(r, c) == doctest::Approx(expect));
    }

  Tensor bad({5});
  CHECK_THROWS(fuse(t, h, e, bad));
}

TEST_CASE("generator A: identity start, additivity, length preservation") {
  Rng rng(11);
  GeneratorA gen(tiny_cfg_a(), rng);
  const int latent = tiny_cfg_a().scaled_latent();

  auto s = noise(16000, 42);
  Tape t;
  Var e_w = t.constant(Tensor({latent}));  // zero embedding
  for (int64_t i = 0; i < latent; ++i) e_w->val[i] = 0.3;
  GeneratorOutput out = gen.generate(t, s, e_w);

  // zero-initialized final layer -> delta == 0 -> s_w == s (SI-SNR cap)
  CHECK(si_snr(s, out.watermarked->val.vec()) >= 60.0);
  for (int64_t i = 0; i < out.delta->val.numel(); ++i) CHECK(out.delta->val[i] == 0.0);

  // additivity s_w - s - delta = 0 holds for arbitrary parameters
  for (Param* p : gen.params())
    if (p->name == "gen_a.dec_out.w" || p->name == "gen_a.dec_out.b") {
      Rng r2(7);
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = r2.normal(0.0, 0.1);
    }
  for (int64_t len : {16000, 16001, 31999, 320, 321}) {
    Tape t2;
    Var e2 = t2.constant(Tensor::full({latent}, 0.25));
    auto x = noise(len, 99 + static_cast<uint64_t>(len));
    GeneratorOutput o2 = gen.generate(t2, x, e2);
    REQUIRE(o2.watermarked->val.numel() == len);  // length preserved
    REQUIRE(o2.delta->val.numel() == len);
    double max_err = 0;
    for (int64_t i = 0; i < len; ++i)
      max_err = std::max(max_err, std::fabs(o2.watermarked->val[i] - x[static_cast<size_t>(i)] -
                                            o2.delta->val[i]));
    CHECK(max_err <= 1e-7);
  }

  CHECK_THROWS(gen.generate(t, noise(100, 1), t.constant(Tensor::full({latent}, 0.1))));
}

TEST_CASE("generator A: silence protection equals the zero-embedding run") {
  Rng rng(13);
  GeneratorA gen(tiny_cfg_a(), rng);
  const int latent = tiny_cfg_a().scaled_latent();
  // give the zero-initialized output layer some weights
  for (Param* p : gen.params()) {
    Rng r2(17);
    if (p->name.find("dec_out") != std::string::npos)
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = r2.normal(0.0, 0.05);
  }
  // all-silent clip (below the VAD absolute floor) -> mask all zero
  std::vector<double> quiet(3200, 0.0);
  for (size_t i = 0; i < quiet.size(); ++i) quiet[i] = 5e-5 * std::sin(0.01 * i);

  Tape t1;
  GeneratorOutput with_embed = gen.generate(t1, quiet, t1.constant(Tensor::full({latent}, 1.0)));
  for (double v : with_embed.vad.vec()) REQUIRE(v == 0.0);

  Tape t2;
  GeneratorOutput zero_embed = gen.generate(t2, quiet, t2.constant(Tensor::zeros({latent})));
  for (int64_t i = 0; i < with_embed.delta->val.numel(); ++i)
    CHECK(with_embed.delta->val[i] == zero_embed.delta->val[i]);
}

TEST_CASE("generator A: length preservation over random lengths (sampled)") {
  Rng rng(15);
  GeneratorA gen(tiny_cfg_a(), rng);
  const int latent = tiny_cfg_a().scaled_latent();
  Rng lens(21);
  for (int i = 0; i < 25; ++i) {  // acceptance covers the full 1000-length sweep
    const int64_t len = 320 + lens.uniform_int(16000);
    Tape t;
    auto x = noise(len, 1000 + static_cast<uint64_t>(i));
    GeneratorOutput o = gen.generate(t, x, t.constant(Tensor::full({latent}, 0.1)));
    CHECK(o.watermarked->val.numel() == len);
  }
}

TEST_CASE("generator A: d||delta||^2 / d(embedding) matches finite differences") {
  Rng rng(19);
  GeneratorConfigA cfg = tiny_cfg_a();
  GeneratorA gen(cfg, rng);
  const int latent = cfg.scaled_latent();
  // non-trivial output layer
  for (Param* p : gen.params()) {
    Rng r2(23);
    if (p->name.find("dec_out") != std::string::npos)
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = r2.normal(0.0, 0.1);
  }
  auto s = noise(640, 3);

  auto loss_of = [&](const std::vector<double>& ew) {
    Tape t;
    Var e = t.constant(Tensor({latent}, ew));
    GeneratorOutput o = gen.generate(t, s, e);
    return sum_sq(t, o.delta)->val.item();
  };

  Rng er(29);
  std::vector<double> ew(static_cast<size_t>(latent));
  for (auto& v : ew) v = er.normal(0.0, 0.5);

  Tape t;
  Var e = t.make(Tensor({latent}, ew), true);
  GeneratorOutput o = gen.generate(t, s, e);
  Var loss = sum_sq(t, o.delta);
  t.backward(loss);

  auto fd = to::fd_gradient(loss_of, ew, 1e-5);
  CHECK(to::rel_error(e->grad.vec(), fd) < 1e-4);
}

TEST_CASE("generator T: round trip, frame count, latent width") {
  GeneratorConfigT cfg;
  cfg.desk_scale = 0.0625;
  CHECK(cfg.latent_dim() == 513);

  Rng rng(31);
  GeneratorT gen(cfg, rng);
  auto s = noise(16384, 5, 0.2);

  Tape t;
  Var e_w = t.constant(Tensor({513}));
  GeneratorOutput out = gen.generate(t, s, e_w);
  // zero-initialized embedder head -> dM = 0 -> s_w is the analysis-synthesis
  // round trip of s
  CHECK(si_snr(s, out.watermarked->val.vec()) >= 50.0);
  for (int64_t i = 0; i < out.delta->val.numel(); ++i)
    CHECK(std::fabs(out.delta->val[i]) < 1e-12);

  // frame count for centered analysis: 1 + floor(16384/256) = 65
  auto sp = dsp::stft_analyze(s, 1024, 256);
  CHECK(sp.frames == 65);
  CHECK(sp.bins == 513);

  CHECK_THROWS(gen.generate(t, noise(512, 1), t.constant(Tensor::zeros({513}))));
}

TEST_CASE("generator T: d||delta||^2 / d(embedding) matches finite differences") {
  GeneratorConfigT cfg;
  cfg.desk_scale = 0.03;  // tiny hidden layer
  Rng rng(37);
  GeneratorT gen(cfg, rng);
  // non-zero embedder head so delta responds to the embedding
  for (Param* p : gen.params()) {
    Rng r2(41);
    if (p->name.find("embed" + std::to_string(cfg.embedder_layers - 1)) != std::string::npos &&
        p->name.find(".w") != std::string::npos)
      for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = r2.normal(0.0, 0.05);
  }
  auto s = noise(2048, 7, 0.2);

  // probe a subset of embedding coordinates (513 FD evals would be slow)
  auto loss_of = [&](const std::vector<double>& ew) {
    Tape t;
    Var e = t.constant(Tensor({513}, ew));
    GeneratorOutput o = gen.generate(t, s, e);
    return sum_sq(t, o.delta)->val.item();
  };
  Rng er(43);
  std::vector<double> ew(513);
  for (auto& v : ew) v = er.normal(0.0, 0.3);

  Tape t;
  Var e = t.make(Tensor({513}, ew), true);
  GeneratorOutput o = gen.generate(t, s, e);
  t.backward(sum_sq(t, o.delta));

  const double h = 1e-5;
  std::vector<double> an, fd;
  for (int64_t k = 0; k < 513; k += 37) {
    auto probe = ew;
    probe[static_cast<size_t>(k)] = ew[static_cast<size_t>(k)] + h;
    const double fp = loss_of(probe);
    probe[static_cast<size_t>(k)] = ew[static_cast<size_t>(k)] - h;
    const double fm = loss_of(probe);
    fd.push_back((fp - fm) / (2 * h));
    an.push_back(e->grad[k]);
  }
  CHECK(to::rel_error(an, fd) < 1e-4);
}
