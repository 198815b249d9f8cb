#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "unclean/common.hpp"
#include "unclean/trigger.hpp"

using namespace unclean;

namespace {

ImageTensor random_image(int h, int w, int c, Rng& rng, double lo = 0.0, double hi = 1.0) {
  ImageTensor img(h, w, c);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

FrequencyTrigger toy_trigger(uint64_t seed, double sigma = 0.05, double theta = 0.0) {
  FrequencyTrigger trig = init_trigger({4, 4, 1}, 1.0, 3.0, 0.01, 0.05, seed, sigma);
  trig.theta = theta;
  return trig;
}

std::string temp_path(const char* name) {
  return std::string("test_tmp_") + name;
}

}  // namespace

TEST_CASE("blend is the identity when alpha is (numerically) zero") {
  Rng rng(3);
  ImageTensor img = random_image(8, 8, 1, rng);
  FrequencyTrigger trig = init_trigger({8, 8, 1}, 1.0, 4.0, 0.0, 0.0, 5, 0.5);
  trig.theta = -40.0;  // alpha ~ 4e-18
  CHECK(blend_trigger(img, trig).max_abs_diff(img) <= 1e-5);
}

TEST_CASE("blend is the identity when the band is empty") {
  Rng rng(4);
  ImageTensor img = random_image(8, 8, 1, rng);
  FrequencyTrigger trig = init_trigger({8, 8, 1}, 50.0, 60.0, 0.0, 0.0, 5, 0.5);
  trig.theta = 3.0;
  CHECK(trig.mask().all_zero());
  CHECK(blend_trigger(img, trig).max_abs_diff(img) <= 1e-5);
}

TEST_CASE("blend matches the frequency-domain composition oracle") {
  Rng rng(6);
  ImageTensor img = random_image(8, 8, 1, rng);
  FrequencyTrigger trig = init_trigger({8, 8, 1}, 2.0, 4.0, 0.0, 0.0, 9, 0.3);
  trig.theta = 0.7;
  const double a = trig.alpha();
  FrequencyMask mask = trig.mask();

  ImageTensor fi = oracle::dct2(img);
  ImageTensor ft = oracle::dct2(trig.t);
  ImageTensor fout = fi;
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v)
      if (oracle::in_band(u, v, 2.0, 4.0))
        fout.at(0, u, v) = fi.at(0, u, v) + a * (ft.at(0, u, v) - fi.at(0, u, v));
  ImageTensor expected = oracle::idct2(fout);

  CHECK(blend_preclamp(img, trig, mask).max_abs_diff(expected) <= 1e-9);
}

TEST_CASE("band isolation: out-of-band coefficients survive the blend") {
  Rng rng(7);
  ImageTensor img = random_image(8, 8, 2, rng);
  FrequencyTrigger trig = init_trigger({8, 8, 2}, 2.0, 4.0, 0.0, 0.0, 11, 0.5);
  trig.theta = 2.0;
  FrequencyMask mask = trig.mask();
  ImageTensor before = dct2(img);
  ImageTensor after = dct2(blend_preclamp(img, trig, mask));
  for (int c = 0; c < 2; ++c)
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v)
        if (!mask.at(u, v))
          CHECK(std::fabs(after.at(c, u, v) - before.at(c, u, v)) <= 1e-12);
}

TEST_CASE("blend output always lands in [0, 1]") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    ImageTensor img = random_image(8, 8, 1, rng);
    FrequencyTrigger trig = random_trigger({8, 8, 1}, 1.0, 6.0, 100 + trial, 2.0);
    ImageTensor out = blend_trigger(img, trig);
    for (double v : out.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("blend rejects shape mismatches") {
  Rng rng(9);
  ImageTensor img = random_image(8, 8, 1, rng);
  FrequencyTrigger trig = init_trigger({4, 4, 1}, 1.0, 3.0, 0.0, 0.05, 1);
  CHECK_THROWS_AS(blend_trigger(img, trig, trig.mask()), ConfigError);
}

TEST_CASE("trigger-loss gradients match central finite differences") {
  // Analytic side: input_gradient through the shadow composed with
  // blend_backward, plus the closed-form regularizer terms. Numeric side:
  // central differences of trigger_loss. Carriers keep the blend strictly
  // inside (0,1) so the clamp's straight-through gradient is exact.
  Rng rng(10);
  std::vector<ImageTensor> carriers;
  for (int i = 0; i < 3; ++i) carriers.push_back(random_image(4, 4, 1, rng, 0.35, 0.65));
  Classifier shadow(make_net_spec("mlp", {4, 4, 1}, 3), 21);
  FrequencyTrigger trig = toy_trigger(33, 0.05, 0.3);
  FrequencyMask mask = trig.mask();
  const int target = 1;

  for (const ImageTensor& img : carriers) {
    ImageTensor pre = blend_preclamp(img, trig, mask);
    for (double v : pre.data) {
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
    }
  }

  ImageTensor g_t(4, 4, 1);
  double g_theta = 0.0;
  for (const ImageTensor& img : carriers) {
    ImageTensor blended = blend_trigger(img, trig, mask);
    ImageTensor up;
    shadow.input_gradient(blended, target, up);
    BlendGrad bg = blend_backward(img, trig, mask, up);
    for (size_t k = 0; k < g_t.data.size(); ++k) g_t.data[k] += bg.d_t.data[k];
    g_theta += bg.d_theta;
  }
  for (double& v : g_t.data) v /= double(carriers.size());
  g_theta /= double(carriers.size());
  double t_norm = 0.0;
  for (double v : trig.t.data) t_norm += v * v;
  t_norm = std::sqrt(t_norm);
  for (size_t k = 0; k < g_t.data.size(); ++k) g_t.data[k] += trig.lambda_t * trig.t.data[k] / t_norm;
  const double a = trig.alpha();
  g_theta += trig.lambda_alpha * a * (1.0 - a);

  const double eps = 1e-5;
  for (size_t k = 0; k < trig.t.data.size(); ++k) {
    FrequencyTrigger plus = trig, minus = trig;
    plus.t.data[k] += eps;
    minus.t.data[k] -= eps;
    const double num = (trigger_loss(shadow, carriers, target, plus) -
                        trigger_loss(shadow, carriers, target, minus)) /
                       (2.0 * eps);
    const double denom = std::max({std::fabs(num), std::fabs(g_t.data[k]), 1e-4});
    CHECK(std::fabs(num - g_t.data[k]) / denom <= 1e-3);
  }
  FrequencyTrigger plus = trig, minus = trig;
  plus.theta += eps;
  minus.theta -= eps;
  const double num_theta = (trigger_loss(shadow, carriers, target, plus) -
                            trigger_loss(shadow, carriers, target, minus)) /
                           (2.0 * eps);
  const double denom = std::max({std::fabs(num_theta), std::fabs(g_theta), 1e-4});
  CHECK(std::fabs(num_theta - g_theta) / denom <= 1e-3);
}

TEST_CASE("blend_backward matches finite differences of a linear functional") {
  Rng rng(12);
  ImageTensor img = random_image(4, 4, 1, rng, 0.3, 0.7);
  ImageTensor weights = random_image(4, 4, 1, rng, -1.0, 1.0);
  FrequencyTrigger trig = toy_trigger(44, 0.05, -0.2);
  FrequencyMask mask = trig.mask();

  auto functional = [&](const FrequencyTrigger& t) {
    ImageTensor out = blend_trigger(img, t, mask);
    double s = 0.0;
    for (size_t k = 0; k < out.data.size(); ++k) s += weights.data[k] * out.data[k];
    return s;
  };

  BlendGrad bg = blend_backward(img, trig, mask, weights);
  const double eps = 1e-6;
  for (size_t k = 0; k < trig.t.data.size(); ++k) {
    FrequencyTrigger plus = trig, minus = trig;
    plus.t.data[k] += eps;
    minus.t.data[k] -= eps;
    const double num = (functional(plus) - functional(minus)) / (2.0 * eps);
    CHECK(num == doctest::Approx(bg.d_t.data[k]).epsilon(1e-4).scale(1.0));
  }
  FrequencyTrigger plus = trig, minus = trig;
  plus.theta += eps;
  minus.theta -= eps;
  CHECK((functional(plus) - functional(minus)) / (2.0 * eps) ==
        doctest::Approx(bg.d_theta).epsilon(1e-4).scale(1.0));
}

TEST_CASE("optimizer lowers the trigger loss on a separable toy") {
  Rng rng(14);
  std::vector<ImageTensor> carriers;
  for (int i = 0; i < 16; ++i) carriers.push_back(random_image(8, 8, 1, rng, 0.2, 0.8));
  Classifier shadow(make_net_spec("mlp", {8, 8, 1}, 3), 5);
  FrequencyTrigger init = init_trigger({8, 8, 1}, 1.0, 4.0, 0.001, 0.05, 7);

  TriggerOptConfig cfg;
  cfg.steps = 60;
  cfg.lr = 0.1;
  cfg.seed = 7;
  TriggerTrace trace;
  FrequencyTrigger out = optimize_trigger(shadow, carriers, 2, init, cfg, &trace);

  REQUIRE(trace.loss.size() == 60);
  CHECK(trigger_loss(shadow, carriers, 2, out) < trigger_loss(shadow, carriers, 2, init));
  CHECK(out.f_min == init.f_min);
  CHECK(out.f_max == init.f_max);
}

TEST_CASE("freeze_theta pins the blending strength") {
  Rng rng(15);
  std::vector<ImageTensor> carriers = {random_image(8, 8, 1, rng)};
  Classifier shadow(make_net_spec("mlp", {8, 8, 1}, 2), 6);
  FrequencyTrigger init = init_trigger({8, 8, 1}, 1.0, 4.0, 0.001, 0.05, 8);
  init.theta = 0.25;
  TriggerOptConfig cfg;
  cfg.steps = 5;
  cfg.freeze_theta = true;
  cfg.seed = 8;
  FrequencyTrigger out = optimize_trigger(shadow, carriers, 1, init, cfg);
  CHECK(out.theta == 0.25);
}

TEST_CASE("optimizer is deterministic under a fixed seed") {
  Rng rng(16);
  std::vector<ImageTensor> carriers;
  for (int i = 0; i < 6; ++i) carriers.push_back(random_image(8, 8, 1, rng));
  Classifier shadow(make_net_spec("mlp", {8, 8, 1}, 3), 9);
  FrequencyTrigger init = init_trigger({8, 8, 1}, 1.0, 4.0, 0.001, 0.05, 10);
  TriggerOptConfig cfg;
  cfg.steps = 10;
  cfg.seed = 42;
  FrequencyTrigger a = optimize_trigger(shadow, carriers, 1, init, cfg);
  FrequencyTrigger b = optimize_trigger(shadow, carriers, 1, init, cfg);
  CHECK(a.t.max_abs_diff(b.t) == 0.0);
  CHECK(a.theta == b.theta);
}

TEST_CASE("optimizer rejects bad inputs") {
  Classifier shadow(make_net_spec("mlp", {4, 4, 1}, 2), 1);
  FrequencyTrigger init = toy_trigger(1);
  TriggerOptConfig cfg;
  CHECK_THROWS_AS(optimize_trigger(shadow, {}, 1, init, cfg), ConfigError);
  cfg.steps = -1;
  Rng rng(2);
  std::vector<ImageTensor> carriers = {random_image(4, 4, 1, rng)};
  CHECK_THROWS_AS(optimize_trigger(shadow, carriers, 1, init, cfg), ConfigError);
  CHECK_THROWS_AS(trigger_loss(shadow, {}, 1, init), ConfigError);
}

TEST_CASE("trigger serialization round-trips byte-identically") {
  Rng rng(18);
  FrequencyTrigger trig = init_trigger({6, 5, 2}, 1.0, 3.0, 0.01, 0.05, 77, 0.4);
  trig.theta = -1.25;
  const std::string p1 = temp_path("trig_a.bin");
  const std::string p2 = temp_path("trig_b.bin");
  save_trigger(trig, p1);
  FrequencyTrigger loaded = load_trigger(p1);
  CHECK(loaded.t.max_abs_diff(trig.t) == 0.0);
  CHECK(loaded.theta == trig.theta);
  CHECK(loaded.f_min == trig.f_min);
  CHECK(loaded.f_max == trig.f_max);
  CHECK(loaded.lambda_alpha == trig.lambda_alpha);
  CHECK(loaded.lambda_t == trig.lambda_t);
  CHECK(loaded.seed == trig.seed);

  save_trigger(loaded, p2);
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("trigger loader rejects corrupt files") {
  const std::string path = temp_path("trig_bad.bin");
  {
    std::ofstream os(path, std::ios::binary);
    os << "definitely not a trigger";
  }
  CHECK_THROWS_AS(load_trigger(path), ConfigError);
  CHECK_THROWS_AS(load_trigger("no_such_file.bin"), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("random_trigger is loud and band-limited by construction") {
  FrequencyTrigger trig = random_trigger({8, 8, 1}, 2.0, 4.0, 3);
  CHECK(trig.alpha() > 0.8);
  CHECK(trig.f_min == 2.0);
  CHECK(trig.f_max == 4.0);
  double norm = 0.0;
  for (double v : trig.t.data) norm += v * v;
  CHECK(norm > 0.0);
}
