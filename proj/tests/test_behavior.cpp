#include <cmath>
#include <numbers>

#include "doctest.h"
#include "orl/behavior/behavior.hpp"
#include "orl/errors.hpp"
#include "test_support.hpp"

using namespace orl;
using orl::test::fd_gradient;
using orl::test::max_rel_error;

namespace {

// Independent closed forms.
double nll_oracle(double mu, double beta, double a) {
  return 0.5 * (std::log(2.0 * std::numbers::pi) + beta + (a - mu) * (a - mu) * std::exp(-beta));
}
double sigmoid_oracle(double z1, double z2, double b) { return 1.0 / (1.0 + std::exp(z1 * b - z2)); }

/// Model whose outputs are constant: mean `mu`, log-variance `beta` (pre-clamp).
GaussianBehaviorModel constant_model(const Vec& mu, const Vec& beta, int obs_dim = 1) {
  const auto act = static_cast<int>(mu.size());
  GaussianBehaviorModel m{MlpNet({obs_dim, act}, OutputActivation::kNone),
                          MlpNet({obs_dim, act}, OutputActivation::kNone), -10.0, 4.0, {}};
  m.mean_net.bias(0) = mu;
  m.log_var_net.bias(0) = beta;
  m.stats = {Vec::Zero(obs_dim), Vec::Ones(obs_dim)};
  return m;
}

OfflineDataset gaussian_actions(std::size_t n, double mean, double stddev, std::uint64_t seed) {
  DatasetBuilder b(1, 1);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec s = Vec::Constant(1, rng.uniform(-1.0, 1.0));
    const double a = std::clamp(rng.normal(mean, stddev), -1.0, 1.0);
    b.add({s, Vec::Constant(1, a), 0.0, s, true});
  }
  return std::move(b).build(Manifest{"twinpeaks1d", {{"gauss", n, seed}}, seed});
}

/// s < 0: actions N(0, wide^2); s >= 0: N(0, narrow^2).
OfflineDataset two_regions(std::size_t n, double wide, double narrow, std::uint64_t seed) {
  DatasetBuilder b(1, 1);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform(-1.0, 1.0);
    const double a = std::clamp(rng.normal(0.0, s < 0.0 ? wide : narrow), -1.0, 1.0);
    b.add({Vec::Constant(1, s), Vec::Constant(1, a), 0.0, Vec::Constant(1, s), true});
  }
  return std::move(b).build(Manifest{"twinpeaks1d", {{"regions", n, seed}}, seed});
}

}  // namespace

TEST_CASE("gaussian_nll closed forms") {
  const Vec zero = Vec::Zero(1);
  CHECK(gaussian_nll(zero, zero, zero) == doctest::Approx(0.9189385).epsilon(1e-7));
  CHECK(gaussian_nll(zero, zero, Vec::Constant(1, 1.0)) ==
        doctest::Approx(1.4189385).epsilon(1e-7));
  CHECK(gaussian_nll(zero, zero, zero) == doctest::Approx(nll_oracle(0, 0, 0)).epsilon(1e-15));

  SUBCASE("a = mu minimizes over a") {
    const Vec mu = Vec::Constant(1, 0.3), beta = Vec::Constant(1, -1.0);
    const double at_mu = gaussian_nll(mu, beta, mu);
    for (double d : {-0.2, -0.01, 0.01, 0.2}) {
      CHECK(gaussian_nll(mu, beta, Vec::Constant(1, 0.3 + d)) > at_mu);
    }
  }
  SUBCASE("sums independent per-dimension terms") {
    Rng rng(4);
    const Vec mu = test::random_vec(3, rng), beta = test::random_vec(3, rng, -2, 2),
              a = test::random_vec(3, rng);
    double expected = 0.0;
    for (int j = 0; j < 3; ++j) expected += nll_oracle(mu[j], beta[j], a[j]);
    CHECK(gaussian_nll(mu, beta, a) == doctest::Approx(expected).epsilon(1e-13));

    // Permuting action dims permutes nothing but the summation order.
    const Eigen::PermutationMatrix<3> perm(Eigen::Vector3i(2, 0, 1));
    CHECK(gaussian_nll(perm * mu, perm * beta, perm * a) == doctest::Approx(expected));
  }
  SUBCASE("head gradients match central differences") {
    for (int seed = 0; seed < 20; ++seed) {
      Rng rng(200 + seed);
      const Vec mu = test::random_vec(2, rng), beta = test::random_vec(2, rng, -2, 2),
                a = test::random_vec(2, rng);
      Vec gmu, gbeta;
      gaussian_nll(mu, beta, a, &gmu, &gbeta);
      CHECK(max_rel_error(gmu, fd_gradient([&](const Vec& m) { return gaussian_nll(m, beta, a); },
                                           mu)) < 1e-5);
      CHECK(max_rel_error(gbeta, fd_gradient([&](const Vec& b) { return gaussian_nll(mu, b, a); },
                                             beta)) < 1e-5);
    }
  }
  SUBCASE("non-finite inputs are rejected") {
    CHECK_THROWS_AS(gaussian_nll(zero, zero, Vec::Constant(1, std::nan(""))), InvalidInput);
    CHECK_THROWS_AS(gaussian_nll(zero, Vec::Zero(2), zero), InvalidInput);
  }
}

TEST_CASE("behavior_nll_batch parameter gradients match central differences") {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(300 + seed);
    BehaviorConfig cfg;
    cfg.hidden = {8, 8};
    GaussianBehaviorModel model = GaussianBehaviorModel::make(3, 2, cfg, rng);
    model.stats = {Vec::Zero(3), Vec::Ones(3)};
    const Mat s = test::random_mat(3, 6, rng);
    const Mat a = test::random_mat(2, 6, rng);
    const BehaviorLoss loss = behavior_nll_batch(model, s, a);

    const auto with_mean = [&](const Vec& p) {
      GaussianBehaviorModel m = model;
      m.mean_net.params() = p;
      return behavior_nll_batch(m, s, a, false).value;
    };
    const auto with_var = [&](const Vec& p) {
      GaussianBehaviorModel m = model;
      m.log_var_net.params() = p;
      return behavior_nll_batch(m, s, a, false).value;
    };
    CHECK(max_rel_error(loss.mean_grad, fd_gradient(with_mean, model.mean_net.params())) < 1e-5);
    CHECK(max_rel_error(loss.log_var_grad, fd_gradient(with_var, model.log_var_net.params())) <
          1e-5);
  }
}

TEST_CASE("beta_hat") {
  SUBCASE("single action dim equals the output") {
    const auto m = constant_model(Vec::Zero(1), Vec::Constant(1, -1.25));
    CHECK(beta_hat(m, Vec(Vec::Zero(1))) == -1.25);
  }
  SUBCASE("arithmetic mean over dims") {
    const auto m = constant_model(Vec::Zero(2), (Vec(2) << 0.0, 2.0).finished());
    CHECK(beta_hat(m, Vec(Vec::Zero(1))) == 1.0);
    const Vec batch = beta_hat(m, Mat(Mat::Zero(1, 4)));
    CHECK(batch == Vec::Constant(4, 1.0));
  }
  SUBCASE("outputs are clamped to the bounds") {
    const auto low = constant_model(Vec::Zero(1), Vec::Constant(1, -25.0));
    CHECK(beta_hat(low, Vec(Vec::Zero(1))) == -10.0);
    const auto high = constant_model(Vec::Zero(1), Vec::Constant(1, 9.0));
    CHECK(beta_hat(high, Vec(Vec::Zero(1))) == 4.0);
  }
}

TEST_CASE("compute_lambda") {
  const WeightConfig defaults{10.0, 5.0};
  CHECK(compute_lambda(defaults, 0.5) == 0.5);
  CHECK(compute_lambda(defaults, 0.0) == doctest::Approx(0.9933071).epsilon(1e-6));
  CHECK(compute_lambda(defaults, 1.0) == doctest::Approx(0.0066929).epsilon(1e-6));
  CHECK(std::abs(compute_lambda(defaults, 0.0) - 0.9933071) < 1e-6);
  CHECK(std::abs(compute_lambda(defaults, 1.0) - 0.0066929) < 1e-6);

  SUBCASE("agrees with the textbook sigmoid") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
      const double b = rng.uniform(-3.0, 3.0);
      const double z1 = rng.uniform(0.0, 5.0), z2 = rng.uniform(-5.0, 5.0);
      CHECK(compute_lambda({z1, z2}, b) == doctest::Approx(sigmoid_oracle(z1, z2, b)));
    }
  }
  SUBCASE("strictly decreasing and inside (0, 1)") {
    // Over the clamp range the sigmoid stays away from 0 and 1 in double precision.
    double prev = 2.0;
    for (int i = 0; i < 1000; ++i) {
      const double b = -3.0 + 6.0 * i / 999.0;
      const double lam = compute_lambda({1.0, 0.5}, b);
      CHECK(lam < prev);
      CHECK(lam > 0.0);
      CHECK(lam < 1.0);
      prev = lam;
    }
  }
  SUBCASE("sigmoid symmetry about zeta2 / zeta1") {
    for (double b : {-1.0, 0.1, 0.3, 0.77, 2.0}) {
      CHECK(compute_lambda(defaults, b) + compute_lambda(defaults, 2.0 * 0.5 - b) ==
            doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("saturates without overflow") {
    CHECK(compute_lambda(defaults, 1e6) >= 0.0);
    CHECK(compute_lambda(defaults, 1e6) < 1e-300);
    CHECK(compute_lambda(defaults, -1e6) == 1.0);
    CHECK(std::isfinite(compute_lambda({1e300, 0.0}, 10.0)));
  }
  SUBCASE("zeta1 = 0 gives a state-independent weight") {
    CHECK(compute_lambda({0.0, 1000.0}, -10.0) == 1.0);
    CHECK(compute_lambda({0.0, 1000.0}, 4.0) == 1.0);
  }
  SUBCASE("centered zeta2 puts the midpoint at the center") {
    for (double c : {-3.0, -0.5, 0.0, 1.2}) {
      CHECK(compute_lambda({10.0, centered_zeta2(10.0, c)}, c) == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("fit_behavior") {
  BehaviorConfig cfg;
  cfg.hidden = {32, 32};
  cfg.batch_size = 128;
  cfg.optimizer.lr = 1e-3;

  SUBCASE("recovers a state-independent Gaussian") {
    const OfflineDataset ds = gaussian_actions(4000, 0.3, 0.2, 1);
    cfg.epochs = 40;
    Rng rng(10);
    BehaviorFitReport report;
    const GaussianBehaviorModel m = fit_behavior(ds, cfg, rng, &report);
    const double final_nll =
        behavior_nll_batch(m, normalize_states(m.stats, ds.states()), ds.actions(), false).value;
    CHECK(final_nll <= report.initial_nll);
    CHECK(report.epoch_nll.size() == 40);
    for (double s : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
      const Vec x = normalize_state(m.stats, Vec::Constant(1, s));
      CHECK(std::abs(m.mean(x)[0] - 0.3) < 0.05);
      const double sigma = std::exp(0.5 * m.log_variance(x)[0]);
      CHECK(std::abs(sigma - 0.2) < 0.2 * 0.2);
    }
  }
  SUBCASE("higher action spread gives higher beta_hat") {
    const OfflineDataset ds = two_regions(4000, 0.5, 0.05, 2);
    cfg.epochs = 40;
    Rng rng(11);
    const GaussianBehaviorModel m = fit_behavior(ds, cfg, rng);
    double wide = 0.0, narrow = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double s = 0.02 + 0.96 * i / 49.0;
      wide += beta_hat(m, normalize_state(m.stats, Vec::Constant(1, -s)));
      narrow += beta_hat(m, normalize_state(m.stats, Vec::Constant(1, s)));
    }
    CHECK(wide / 50 > narrow / 50);
  }
  SUBCASE("a single repeated pair drives beta_hat to the floor") {
    DatasetBuilder b(1, 1);
    for (int i = 0; i < 256; ++i) {
      b.add({Vec::Constant(1, 0.2), Vec::Constant(1, -0.4), 0.0, Vec::Constant(1, 0.2), true});
    }
    const OfflineDataset ds = std::move(b).build(Manifest{"twinpeaks1d", {{"one", 256, 0}}, 0});
    cfg.epochs = 1500;
    cfg.batch_size = 256;
    cfg.optimizer.lr = 1e-2;
    Rng rng(12);
    const GaussianBehaviorModel m = fit_behavior(ds, cfg, rng);
    CHECK(beta_hat(m, normalize_state(m.stats, Vec::Constant(1, 0.2))) == cfg.beta_min);
  }
  SUBCASE("same seed reproduces the model exactly") {
    const OfflineDataset ds = gaussian_actions(500, 0.0, 0.3, 3);
    cfg.epochs = 3;
    Rng r1(5), r2(5);
    const GaussianBehaviorModel a = fit_behavior(ds, cfg, r1);
    const GaussianBehaviorModel b = fit_behavior(ds, cfg, r2);
    CHECK(a.mean_net == b.mean_net);
    CHECK(a.log_var_net == b.log_var_net);
  }
}

TEST_CASE("behavior checkpoints round-trip") {
  test::TempDir dir("behavior");
  BehaviorConfig cfg;
  cfg.hidden = {6};
  cfg.beta_min = -7.0;
  Rng rng(1);
  GaussianBehaviorModel m = GaussianBehaviorModel::make(2, 2, cfg, rng);
  m.stats = {(Vec(2) << 0.5, -1.0).finished(), (Vec(2) << 2.0, 0.25).finished()};
  save_behavior(m, dir.path());
  const GaussianBehaviorModel back = load_behavior(dir.path());
  CHECK(back.mean_net == m.mean_net);
  CHECK(back.log_var_net == m.log_var_net);
  CHECK(back.beta_min == -7.0);
  CHECK(back.beta_max == m.beta_max);
  CHECK(back.stats == m.stats);
  CHECK_THROWS(load_behavior(dir / "missing"));
}
