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

#include "core/dsp.hpp"
#include "core/losses.hpp"
#include "helpers.hpp"

using namespace fakemark;
namespace to = testing_oracles;

namespace {

std::vector<double> noise(int64_t n, uint64_t seed, double sd = 0.3) {
  Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.normal(0.0, sd);
  return x;
}

// FD check of a scalar loss w.r.t. one vector input.
double fd_check(const std::function<double(const std::vector<double>&)>& f,
                const std::vector<double>& x, const std::vector<double>& analytic,
                double h = 1e-6) {
  auto fd = to::fd_gradient(f, x, h);
  return to::rel_error(analytic, fd);
}

ClassProbabilities uniform_p(int c) {
  ClassProbabilities p;
  p.p.assign(static_cast<size_t>(c), 1.0 / c);
  return p;
}

}  // namespace

TEST_CASE("attribution / detection cross entropy closed forms") {
  ClassProbabilities onehot;
  onehot.p = {0, 0, 1, 0};
  CHECK(attribution_loss(onehot, 2) == doctest::Approx(0.0));

  CHECK(attribution_loss(uniform_p(12), 5) == doctest::Approx(std::log(12.0)));  // 2.4849
  CHECK(attribution_loss(uniform_p(12), 5) == doctest::Approx(2.4849).epsilon(1e-4));

  ClassProbabilities half;
  half.p = {0.5, 0.5};
  CHECK(attribution_loss(half, 0) == doctest::Approx(std::log(2.0)));  // 0.6931

  CHECK(detection_loss(uniform_p(4), 1) == doctest::Approx(std::log(4.0)));
  ClassProbabilities zerop;
  zerop.p = {1.0, 0.0};
  CHECK(attribution_loss(zerop, 1) == doctest::Approx(-std::log(1e-12)));  // epsilon guard
  CHECK_THROWS(attribution_loss(half, 5));
}

TEST_CASE("cross entropy gradient via logits matches finite differences") {
  Rng rng(3);
  std::vector<double> logits(6);
  for (auto& v : logits) v = rng.normal(0.0, 1.5);
  Tape t;
  Var l = t.make(Tensor({6}, logits), true);
  t.backward(cross_entropy_logits(t, l, 4));
  auto f = [](const std::vector<double>& lv) {
    double mx = lv[0];
    for (double v : lv) mx = std::max(mx, v);
    double z = 0;
    for (double v : lv) z += std::exp(v - mx);
    return mx + std::log(z) - lv[4];
  };
  CHECK(fd_check(f, logits, l->grad.vec()) < 1e-4);
}

TEST_CASE("mel reconstruction loss identities") {
  auto s = noise(4000, 5);
  Tape t;
  Var sv = t.constant(Tensor({4000}, s));

  // identical signals -> 0
  CHECK(mel_recon_loss(t, sv, t.constant(Tensor({4000}, s)))->val.item() == 0.0);

  // half-amplitude white noise -> |log 0.5| in every mel bin above floor
  std::vector<double> half(s);
  for (auto& v : half) v *= 0.5;
  const double loss = mel_recon_loss(t, sv, t.constant(Tensor({4000}, half)))->val.item();
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  // symmetry
  auto b = noise(4000, 6);
  Var bv = t.constant(Tensor({4000}, b));
  CHECK(mel_recon_loss(t, sv, bv)->val.item() ==
        doctest::Approx(mel_recon_loss(t, bv, sv)->val.item()));

  CHECK_THROWS(mel_recon_loss(t, sv, t.constant(Tensor({100}))));
}

TEST_CASE("mel reconstruction gradient (1k samples)") {
  auto s = noise(1000, 7);
  auto sw = noise(1000, 8);
  auto f = [&](const std::vector<double>& x) {
    Tape t;
    return mel_recon_loss(t, t.constant(Tensor({1000}, s)), t.constant(Tensor({1000}, x)))
        ->val.item();
  };
  Tape t;
  Var x = t.make(Tensor({1000}, sw), true);
  t.backward(mel_recon_loss(t, t.constant(Tensor({1000}, s)), x));
  CHECK(fd_check(f, sw, x->grad.vec()) < 1e-4);
}

TEST_CASE("wm_l1: fixed points and direct oracle") {
  Tape t;
  CHECK(wm_l1_loss(t, t.constant(Tensor::zeros({100})))->val.item() == 0.0);
  CHECK(wm_l1_loss(t, t.constant(Tensor::full({50}, 0.2)))->val.item() ==
        doctest::Approx(0.2));
  auto d = noise(777, 9);
  double direct = 0;
  for (double v : d) direct += std::fabs(v);
  direct /= static_cast<double>(d.size());
  CHECK(wm_l1_loss(t, t.constant(Tensor({777}, d)))->val.item() == doctest::Approx(direct));

  // gradient, on samples pushed away from the |x| kink at zero
  std::vector<double> off(d);
  for (auto& v : off) v += v >= 0 ? 0.05 : -0.05;
  auto f = [&](const std::vector<double>& x) {
    Tape t2;
    return wm_l1_loss(t2, t2.constant(Tensor({777}, x)))->val.item();
  };
  Tape t3;
  Var x = t3.make(Tensor({777}, off), true);
  t3.backward(wm_l1_loss(t3, x));
  CHECK(fd_check(f, off, x->grad.vec()) < 1e-4);
}

TEST_CASE("loudness loss hinge behavior") {
  auto s = noise(4000, 11);
  Tape t;
  Var sv = t.constant(Tensor({4000}, s));

  // delta == s -> exactly softplus(margin)
  const double equal = loudness_loss(t, t.constant(Tensor({4000}, s)), sv)->val.item();
  CHECK(equal == doctest::Approx(std::log1p(std::exp(12.0))));

  // 40 dB quieter -> softplus(-28), far below 1e-3
  std::vector<double> quiet(s);
  for (auto& v : quiet) v *= std::pow(10.0, -40.0 / 20.0);
  CHECK(loudness_loss(t, t.constant(Tensor({4000}, quiet)), sv)->val.item() < 1e-3);

  // doubling delta never decreases the loss
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto d = noise(4000, 100 + static_cast<uint64_t>(trial), rng.uniform(0.001, 0.3));
    std::vector<double> d2(d);
    for (auto& v : d2) v *= 2.0;
    const double l1 = loudness_loss(t, t.constant(Tensor({4000}, d)), sv)->val.item();
    const double l2 = loudness_loss(t, t.constant(Tensor({4000}, d2)), sv)->val.item();
    CHECK(l2 >= l1);
  }
}

TEST_CASE("loudness gradient (1k samples)") {
  auto s = noise(1000, 15);
  auto d = noise(1000, 16, 0.05);
  auto f = [&](const std::vector<double>& x) {
    Tape t;
    return loudness_loss(t, t.constant(Tensor({1000}, x)), t.constant(Tensor({1000}, s)))
        ->val.item();
  };
  Tape t;
  Var x = t.make(Tensor({1000}, d), true);
  t.backward(loudness_loss(t, x, t.constant(Tensor({1000}, s))));
  CHECK(fd_check(f, d, x->grad.vec()) < 1e-4);
}

TEST_CASE("freq_mag loss: scale invariance and direct oracle") {
  auto s = noise(3000, 17);
  Tape t;
  Var sv = t.constant(Tensor({3000}, s));

  // delta proportional to s -> 0 after unit-energy normalization
  std::vector<double> prop(s);
  for (auto& v : prop) v *= 0.03;
  CHECK(freq_mag_loss(t, t.constant(Tensor({3000}, prop)), sv)->val.item() ==
        doctest::Approx(0.0).epsilon(1e-10));

  // non-negative for random pairs, and matches an independent computation
  std::vector<double> sine(3000);
  for (size_t i = 0; i < sine.size(); ++i)
    sine[i] = 0.5 * std::sin(2 * 3.14159265358979323846 * 440.0 * i / 16000.0);
  auto d = noise(3000, 18);
  const double loss = freq_mag_loss(t, t.constant(Tensor({3000}, d)),
                                    t.constant(Tensor({3000}, sine)))
                          ->val.item();
  CHECK(loss >= 0.0);
  {
    // independent oracle: normalize, magnitude STFT, log, frame mean, MSE
    auto spectrum_profile = [](std::vector<double> x) {
      double e = 0;
      for (double v : x) e += v * v;
      const double norm = std::sqrt(e) + 1e-12;
      for (auto& v : x) v /= norm;
      auto sp = dsp::stft_analyze(x, 1024, 256);
      std::vector<double> prof(static_cast<size_t>(sp.bins), 0.0);
      for (int64_t b = 0; b < sp.bins; ++b) {
        for (int64_t fr = 0; fr < sp.frames; ++fr)
          prof[static_cast<size_t>(b)] +=
              std::log(std::max(sp.mag[static_cast<size_t>(b * sp.frames + fr)], 1e-5));
        prof[static_cast<size_t>(b)] /= static_cast<double>(sp.frames);
      }
      return prof;
    };
    auto pa = spectrum_profile(d);
    auto pb = spectrum_profile(sine);
    double mse = 0;
    for (size_t i = 0; i < pa.size(); ++i) mse += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    mse /= static_cast<double>(pa.size());
    CHECK(loss == doctest::Approx(mse).epsilon(1e-9));
  }
}

TEST_CASE("freq_mag gradient (1k samples)") {
  auto s = noise(1000, 19);
  auto d = noise(1000, 20, 0.1);
  auto f = [&](const std::vector<double>& x) {
    Tape t;
    return freq_mag_loss(t, t.constant(Tensor({1000}, x)), t.constant(Tensor({1000}, s)))
        ->val.item();
  };
  Tape t;
  Var x = t.make(Tensor({1000}, d), true);
  t.backward(freq_mag_loss(t, x, t.constant(Tensor({1000}, s))));
  CHECK(fd_check(f, d, x->grad.vec(), 1e-7) < 1e-4);
}

TEST_CASE("adversarial losses: fixed points") {
  // Hand-built single-scale discriminator: final score is conv of the
  // input with a unit kernel, so constant inputs map to their value.
  DiscriminatorConfig cfg;
  cfg.scales = 1;
  cfg.desk_scale = 0.25;
  Rng rng(21);
  DiscriminatorBundle disc(cfg, rng);
  // craft weights so D(x) = mean-ish passthrough: zero all, then make the
  // first layer copy the input to channel 0 and the last layer read it back
  for (Param* p : disc.params())
    for (int64_t i = 0; i < p->w.numel(); ++i) p->w[i] = 0.0;
  auto params = disc.params();
  // conv0 weight [c,1,15]: center tap 1 on channel 0
  params[0]->w.at(0, 0, 7) = 1.0;
  // conv1 [2c,c,9] stride 4: center tap
  params[2]->w.at(0, 0, 4) = 1.0;
  // conv2 [4c,2c,9] stride 4
  params[4]->w.at(0, 0, 4) = 1.0;
  // conv3 [4c,4c,5]
  params[6]->w.at(0, 0, 2) = 1.0;
  // out [1,4c,3]
  params[8]->w.at(0, 0, 1) = 1.0;

  Tape t;
  Var real = t.constant(Tensor::full({640}, 1.0));   // D -> 1
  Var fake = t.make(Tensor::zeros({640}), true);     // D -> 0
  AdversarialLosses l = adversarial_losses(t, real, fake, disc);
  // optimal discriminator: disc_loss = (1-1)^2 + 0^2 = 0
  CHECK(l.disc_loss->val.item() == doctest::Approx(0.0).epsilon(1e-9));

  // s_w == s -> feature matching is exactly zero
  Tape t2;
  Var same = t2.constant(Tensor::full({640}, 0.5));
  Var same2 = t2.make(Tensor::full({640}, 0.5), true);
  AdversarialLosses l2 = adversarial_losses(t2, same, same2, disc);
  CHECK(l2.feat_match->val.item() == 0.0);
}

TEST_CASE("gen_adv gradient through the discriminator (1k samples)") {
  DiscriminatorConfig cfg;
  cfg.scales = 2;
  cfg.desk_scale = 0.25;
  Rng rng(23);
  DiscriminatorBundle disc(cfg, rng);
  auto s = noise(1000, 24);
  auto sw = noise(1000, 25);
  auto f = [&](const std::vector<double>& x) {
    Tape t;
    Var sv = t.constant(Tensor({1000}, s));
    Var xv = t.constant(Tensor({1000}, x));
    return adversarial_losses(t, sv, xv, disc).gen_adv->val.item();
  };
  Tape t;
  Var sv = t.constant(Tensor({1000}, s));
  Var x = t.make(Tensor({1000}, sw), true);
  AdversarialLosses l = adversarial_losses(t, sv, x, disc);
  t.backward(l.gen_adv);
  CHECK(fd_check(f, sw, x->grad.vec()) < 1e-3);
}

TEST_CASE("total loss: documented expansion, linearity") {
  LossComponents c;
  CHECK(total_loss(c) == 0.0);

  // all components 1 -> 10+10+1+1+1+0.1+10+1 = 34.1 (hand sum)
  c.attribution = c.detection = c.mel = c.feat_match = c.adv = 1;
  c.wm_l1 = c.loudness = c.freq_mag = 1;
  CHECK(total_loss(c) == doctest::Approx(34.1));

  // doubling one component moves the total by exactly its weight
  LossComponents d = c;
  d.loudness = 2;
  CHECK(total_loss(d) - total_loss(c) == doctest::Approx(10.0));
  d = c;
  d.wm_l1 = 3;
  CHECK(total_loss(d) - total_loss(c) == doctest::Approx(0.2));

  // tape form agrees with the scalar form
  Tape t;
  auto one = [&] { return t.constant(1.0); };
  Var v = total_loss(t, one(), one(), one(), one(), one(), one(), one(), one());
  CHECK(v->val.item() == doctest::Approx(34.1));
}

TEST_CASE("all losses are non-negative at random inputs") {
  Rng rng(27);
  Tape t;
  for (int trial = 0; trial < 5; ++trial) {
    auto a = noise(1500, 300 + static_cast<uint64_t>(trial));
    auto b = noise(1500, 400 + static_cast<uint64_t>(trial));
    Var av = t.constant(Tensor({1500}, a));
    Var bv = t.constant(Tensor({1500}, b));
    CHECK(mel_recon_loss(t, av, bv)->val.item() >= 0.0);
    CHECK(wm_l1_loss(t, bv)->val.item() >= 0.0);
    CHECK(loudness_loss(t, bv, av)->val.item() >= 0.0);
    CHECK(freq_mag_loss(t, bv, av)->val.item() >= 0.0);
  }
}
