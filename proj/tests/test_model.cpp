#include <Eigen/Dense>
#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "gppl/kernel.hpp"
#include "gppl/metrics.hpp"
#include "gppl/model.hpp"
#include "gppl/random.hpp"
#include "gppl/serialize.hpp"
#include "oracles.hpp"

using gppl::FeatureSet;
using gppl::fit_svi;
using gppl::GpplModel;
using gppl::KernelFamily;
using gppl::KernelParams;
using gppl::NumericalError;
using gppl::PairLikelihood;
using gppl::predict;
using gppl::PreferencePair;
using gppl::SviConfig;
using gppl::ValidationError;

namespace {

gppl::FeatureLayout flat_layout(Eigen::Index dim) {
  gppl::FeatureLayout layout;
  layout.groups.push_back({"values", 0, dim});
  layout.total = dim;
  return layout;
}

FeatureSet make_features(const Eigen::MatrixXd& values) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    ids.push_back("i" + std::to_string(i));
  }
  return FeatureSet(std::move(ids), values, flat_layout(values.cols()));
}

KernelParams unit_matern(Eigen::Index dim, double lengthscale = 1.0) {
  KernelParams k;
  k.family = KernelFamily::matern32;
  k.lengthscales.assign(static_cast<std::size_t>(dim), lengthscale);
  k.alpha0 = 1.0;
  k.beta0 = 1.0;
  return k;
}

SviConfig full_batch_config(Eigen::Index pairs, std::uint64_t seed = 7) {
  SviConfig cfg;
  cfg.batch_size = pairs;
  cfg.num_inducing = 1000;
  cfg.max_iterations = 200;
  cfg.seed = seed;
  return cfg;
}

PreferencePair pair(Eigen::Index worse, Eigen::Index better) {
  return {"i" + std::to_string(worse), "i" + std::to_string(better)};
}

Eigen::MatrixXd spread_points(gppl::Rng& rng, Eigen::Index n,
                              Eigen::Index d, double span = 4.0) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = rng.uniform() * span - span / 2.0;
    }
  }
  return x;
}

}  // namespace

TEST_CASE("chol_with_jitter") {
  SECTION("well-conditioned matrix keeps the base jitter") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 3);
    const auto chol = gppl::detail::chol_with_jitter(k, 1.0);
    CHECK(chol.jitter == Catch::Approx(1e-6));
  }
  SECTION("rank-deficient matrix succeeds through jitter") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Ones(4, 4);
    const auto chol = gppl::detail::chol_with_jitter(k, 1.0);
    const Eigen::MatrixXd recon =
        chol.llt.matrixL() * Eigen::MatrixXd(chol.llt.matrixL()).transpose();
    Eigen::MatrixXd target = k;
    target.diagonal().array() += chol.jitter;
    CHECK((recon - target).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("indefinite matrix exhausts the doublings") {
    Eigen::MatrixXd k = -Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(gppl::detail::chol_with_jitter(k, 1.0), NumericalError);
  }
}

TEST_CASE("kmeans++ selection") {
  gppl::Rng fill(3);
  SECTION("deterministic, sorted, and duplicate-free") {
    const Eigen::MatrixXd x = spread_points(fill, 30, 3);
    gppl::Rng r1(42), r2(42);
    const auto a = gppl::detail::kmeanspp_select(x, 10, r1);
    const auto b = gppl::detail::kmeanspp_select(x, 10, r2);
    CHECK(a == b);
    REQUIRE(a.size() == 10);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    for (Eigen::Index idx : a) {
      CHECK(idx >= 0);
      CHECK(idx < 30);
    }
  }
  SECTION("covers well-separated clusters") {
    // Three tight clusters far apart; D^2 seeding must hit all of them.
    Eigen::MatrixXd x(9, 2);
    gppl::Rng noise(5);
    for (Eigen::Index i = 0; i < 9; ++i) {
      const double cx = (i / 3 == 0) ? 0.0 : (i / 3 == 1) ? 100.0 : -100.0;
      x(i, 0) = cx + noise.uniform() * 0.01;
      x(i, 1) = noise.uniform() * 0.01;
    }
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
      gppl::Rng rng(seed);
      const auto picks = gppl::detail::kmeanspp_select(x, 3, rng);
      std::vector<int> cluster_hits(3, 0);
      for (Eigen::Index idx : picks) ++cluster_hits[static_cast<int>(idx / 3)];
      CHECK(cluster_hits == std::vector<int>{1, 1, 1});
    }
  }
  SECTION("identical points fall back to uniform choice") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
    gppl::Rng rng(11);
    const auto picks = gppl::detail::kmeanspp_select(x, 4, rng);
    REQUIRE(picks.size() == 4);
    CHECK(std::adjacent_find(picks.begin(), picks.end()) == picks.end());
  }
  SECTION("m == n selects everything") {
    const Eigen::MatrixXd x = spread_points(fill, 5, 2);
    gppl::Rng rng(9);
    const auto picks = gppl::detail::kmeanspp_select(x, 5, rng);
    CHECK(picks == std::vector<Eigen::Index>{0, 1, 2, 3, 4});
  }
}

TEST_CASE("single preference orders the posterior means") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.5;
  const FeatureSet features = make_features(x);
  const std::vector<PreferencePair> pairs = {pair(0, 1)};
  const GpplModel model =
      fit_svi(pairs, features, full_batch_config(1), unit_matern(1));
  const auto post = predict(model, x);
  CHECK(post.mean[1] > post.mean[0]);
  CHECK(post.variance.minCoeff() > 0.0);
}

TEST_CASE("contradictory pairs cancel out") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 2.0;
  const FeatureSet features = make_features(x);
  const std::vector<PreferencePair> pairs = {pair(0, 1), pair(1, 0)};
  const GpplModel model =
      fit_svi(pairs, features, full_batch_config(2), unit_matern(1));
  const auto post = predict(model, x);
  const double prior_sd = std::sqrt(model.kernel.scale());
  CHECK(std::abs(post.mean[1] - post.mean[0]) <= 0.05 * prior_sd);
}

TEST_CASE("training is deterministic for a fixed seed") {
  gppl::Rng fill(17);
  const Eigen::MatrixXd x = spread_points(fill, 12, 3);
  const FeatureSet features = make_features(x);
  std::vector<PreferencePair> pairs;
  for (Eigen::Index i = 0; i + 1 < 12; ++i) pairs.push_back(pair(i, i + 1));

  SviConfig cfg;
  cfg.batch_size = 4;  // stochastic path
  cfg.num_inducing = 6;
  cfg.max_iterations = 60;
  cfg.seed = 123;

  const GpplModel a = fit_svi(pairs, features, cfg, unit_matern(3));
  const GpplModel b = fit_svi(pairs, features, cfg, unit_matern(3));
  CHECK(gppl::model_to_json(a).dump() == gppl::model_to_json(b).dump());

  cfg.seed = 124;
  const GpplModel c = fit_svi(pairs, features, cfg, unit_matern(3));
  CHECK(gppl::model_to_json(a).dump() != gppl::model_to_json(c).dump());
}

TEST_CASE("predict reproduces the variational state at inducing points") {
  gppl::Rng fill(23);
  GpplModel model;
  model.kernel = unit_matern(2);
  model.inducing_inputs = spread_points(fill, 4, 2, 8.0);
  model.variational_mean = Eigen::VectorXd(4);
  model.variational_mean << 0.3, -1.2, 0.8, 2.0;
  model.variational_cov = 1e-8 * Eigen::MatrixXd::Identity(4, 4);

  const auto post = predict(model, model.inducing_inputs);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(post.mean[i] ==
          Catch::Approx(model.variational_mean[i]).margin(1e-3));
    // Nearly deterministic posterior: only jitter-scale variance remains.
    CHECK(post.variance[i] < 1e-3);
  }
}

TEST_CASE("predict reverts to the prior far from the data") {
  gppl::Rng fill(29);
  GpplModel model;
  model.kernel = unit_matern(2);
  model.kernel.alpha0 = 2.0;
  model.kernel.beta0 = 200.0;  // scale 100
  model.inducing_inputs = spread_points(fill, 5, 2);
  model.variational_mean = Eigen::VectorXd::Constant(5, 3.0);
  model.variational_cov = Eigen::MatrixXd::Identity(5, 5);

  Eigen::MatrixXd far(1, 2);
  far << 1e6, -1e6;
  const auto post = predict(model, far);
  CHECK(post.mean[0] == Catch::Approx(0.0).margin(1e-8));
  CHECK(post.variance[0] == Catch::Approx(100.0).epsilon(1e-10));
}

TEST_CASE("predict validates the query dimension") {
  GpplModel model;
  model.kernel = unit_matern(2);
  model.inducing_inputs = Eigen::MatrixXd::Zero(1, 2);
  model.variational_mean = Eigen::VectorXd::Zero(1);
  model.variational_cov = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd query = Eigen::MatrixXd::Zero(1, 3);
  CHECK_THROWS_WITH(predict(model, query),
                    Catch::Matchers::ContainsSubstring("3 dimensions") &&
                        Catch::Matchers::ContainsSubstring("expects 2"));
}

TEST_CASE("elbo of the prior state is the expected log likelihood") {
  gppl::Rng fill(31);
  const Eigen::MatrixXd x = spread_points(fill, 6, 2);
  const FeatureSet features = make_features(x);
  const std::vector<PreferencePair> pairs = {pair(0, 1), pair(2, 3),
                                             pair(4, 5), pair(1, 4)};
  const KernelParams kernel = unit_matern(2);

  GpplModel model;
  model.kernel = kernel;
  model.inducing_inputs = x;
  model.variational_mean = Eigen::VectorXd::Zero(6);
  Eigen::MatrixXd khat = gppl::kernel_matrix(x, kernel);
  khat.diagonal().array() += 1e-6 * kernel.scale();
  model.variational_cov = khat;

  // With q equal to the prior the KL term vanishes, so the bound is just
  // the sum of per-pair expectations, each centred at zero with the prior
  // marginal variance of the difference.
  const Eigen::MatrixXd k = gppl::kernel_matrix(x, kernel);
  double expected = 0.0;
  const std::vector<std::pair<int, int>> idx = {{0, 1}, {2, 3}, {4, 5}, {1, 4}};
  for (auto [w, b] : idx) {
    const double var = k(b, b) + k(w, w) - 2.0 * k(b, w);
    expected += gppl::expected_pair_loglik(
                    0.0, var, PairLikelihood::thurstone_mosteller)
                    .value;
  }
  CHECK(gppl::elbo(model, pairs, features) ==
        Catch::Approx(expected).margin(1e-4));
}

TEST_CASE("analytic mean gradient of the bound matches finite differences") {
  gppl::Rng fill(37);
  const Eigen::MatrixXd x = spread_points(fill, 6, 2);
  const FeatureSet features = make_features(x);
  std::vector<PreferencePair> pairs = {pair(0, 1), pair(1, 2), pair(3, 4),
                                       pair(5, 0), pair(2, 4)};
  SviConfig cfg = full_batch_config(static_cast<Eigen::Index>(pairs.size()));
  cfg.max_iterations = 40;
  GpplModel model = fit_svi(pairs, features, cfg, unit_matern(2));

  const Eigen::VectorXd grad = gppl::elbo_grad_mean(model, pairs, features);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < model.variational_mean.size(); ++i) {
    GpplModel up = model;
    GpplModel dn = model;
    up.variational_mean[i] += h;
    dn.variational_mean[i] -= h;
    const double fd = (gppl::elbo(up, pairs, features) -
                       gppl::elbo(dn, pairs, features)) /
                      (2.0 * h);
    CHECK(grad[i] == Catch::Approx(fd).margin(1e-6).epsilon(1e-4));
  }
}

TEST_CASE("full-batch optimisation improves the bound") {
  gppl::Rng fill(41);
  const Eigen::MatrixXd x = spread_points(fill, 10, 2);
  const FeatureSet features = make_features(x);
  std::vector<PreferencePair> pairs;
  for (Eigen::Index i = 0; i + 1 < 10; ++i) pairs.push_back(pair(i, i + 1));

  std::vector<double> trace;
  SviConfig cfg = full_batch_config(static_cast<Eigen::Index>(pairs.size()));
  const GpplModel model = fit_svi(pairs, features, cfg, unit_matern(2), &trace);
  REQUIRE(trace.size() >= 20);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += trace[i];
    tail += trace[trace.size() - 1 - i];
  }
  CHECK(tail / 10.0 > head / 10.0);
  CHECK(std::isfinite(model.metadata.final_elbo));
  CHECK(model.metadata.iterations >= 20);
}

TEST_CASE("stochastic batches still produce a usable model") {
  gppl::Rng fill(43);
  const Eigen::MatrixXd x = spread_points(fill, 15, 2);
  const FeatureSet features = make_features(x);
  std::vector<PreferencePair> pairs;
  // A chain i0 < i1 < ... sampled densely so the ordering is clear.
  for (Eigen::Index i = 0; i < 15; ++i) {
    for (Eigen::Index j = i + 1; j < 15 && j <= i + 3; ++j) {
      pairs.push_back(pair(i, j));
    }
  }
  SviConfig cfg;
  cfg.batch_size = 8;
  cfg.num_inducing = 15;
  cfg.max_iterations = 400;
  cfg.seed = 5;
  std::vector<double> trace;
  const GpplModel model = fit_svi(pairs, features, cfg, unit_matern(2), &trace);
  for (double v : trace) CHECK(std::isfinite(v));
  const auto post = predict(model, x);
  // The chain's extremes must be ordered correctly even under sampling noise.
  CHECK(post.mean[14] > post.mean[0]);
}

TEST_CASE("fit_svi validates its inputs") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const FeatureSet features = make_features(x);
  const SviConfig cfg;
  CHECK_THROWS_AS(fit_svi({}, features, cfg, unit_matern(1)), ValidationError);

  const std::vector<PreferencePair> unknown = {{"i0", "ghost"}};
  CHECK_THROWS_WITH(fit_svi(unknown, features, cfg, unit_matern(1)),
                    Catch::Matchers::ContainsSubstring("ghost"));

  SviConfig bad = cfg;
  bad.forgetting_rate = 0.5;
  const std::vector<PreferencePair> ok = {pair(0, 1)};
  CHECK_THROWS_AS(fit_svi(ok, features, bad, unit_matern(1)), ValidationError);
}

TEST_CASE("posterior mean agrees with an elliptical slice sampler") {
  // Small dense problem: inducing points == training points, so the
  // variational posterior approximates the exact GP posterior that the
  // sampler draws from.
  const Eigen::Index n = 8;
  gppl::Rng fill(47);
  const Eigen::MatrixXd x = spread_points(fill, n, 2, 6.0);
  const FeatureSet features = make_features(x);

  const std::vector<PreferencePair> pairs = {
      pair(0, 1), pair(1, 2), pair(2, 3), pair(3, 4), pair(4, 5),
      pair(5, 6), pair(6, 7), pair(0, 2), pair(2, 4), pair(4, 6),
      pair(1, 5), pair(3, 7)};
  SviConfig cfg = full_batch_config(static_cast<Eigen::Index>(pairs.size()));
  cfg.max_iterations = 500;
  const KernelParams kernel = unit_matern(2);
  const GpplModel model = fit_svi(pairs, features, cfg, kernel);
  const auto post = predict(model, x);

  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n),
                                       std::vector<double>(2));
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i)] = {x(i, 0), x(i, 1)};
  }
  const oracle::Matrix cov = oracle::matern_cov(pts, {1.0, 1.0}, 1.0, 1e-6);
  const oracle::Matrix chol = oracle::cholesky(cov);
  std::vector<oracle::PairIdx> opairs;
  for (const PreferencePair& p : pairs) {
    opairs.push_back({static_cast<std::size_t>(features.row_of(p.worse_id)),
                      static_cast<std::size_t>(features.row_of(p.better_id))});
  }
  const std::vector<double> mcmc =
      oracle::ess_posterior_mean(chol, opairs, 4000, 40000, 99);

  std::vector<double> vi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    vi[static_cast<std::size_t>(i)] = post.mean[i];
  }
  for (std::size_t i = 0; i < vi.size(); ++i) {
    CHECK(vi[i] == Catch::Approx(mcmc[i]).margin(0.25));
  }
  CHECK(gppl::spearman(vi, mcmc) > 0.9);
}

TEST_CASE("synthetic utilities are recovered from sampled preferences") {
  const Eigen::Index n = 50;
  const Eigen::Index dim = 5;
  gppl::Rng fill(53);
  const Eigen::MatrixXd x = spread_points(fill, n, dim);

  // Smooth ground-truth utility over the feature space.
  std::vector<double> truth(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] =
        std::sin(x(i, 0)) + 0.5 * x(i, 1) - 0.25 * x(i, 2) * x(i, 2);
  }

  oracle::Rng sampler(61);
  std::vector<PreferencePair> pairs;
  pairs.reserve(2000);
  while (pairs.size() < 2000) {
    const auto i =
        static_cast<Eigen::Index>(sampler.uniform_int(static_cast<std::uint64_t>(n)));
    const auto j =
        static_cast<Eigen::Index>(sampler.uniform_int(static_cast<std::uint64_t>(n)));
    if (i == j) continue;
    const double p_i_better =
        0.5 * std::erfc(-((truth[static_cast<std::size_t>(i)] -
                           truth[static_cast<std::size_t>(j)]) /
                          std::sqrt(2.0)) /
                        std::sqrt(2.0));
    if (sampler.uniform() < p_i_better) {
      pairs.push_back(pair(j, i));
    } else {
      pairs.push_back(pair(i, j));
    }
  }

  const FeatureSet features = make_features(x);
  SviConfig cfg;
  cfg.batch_size = 2000;  // full batch
  cfg.num_inducing = 50;
  cfg.max_iterations = 200;
  cfg.seed = 3;
  const GpplModel model = fit_svi(pairs, features, cfg, unit_matern(dim, 2.0));
  const auto post = predict(model, x);

  std::vector<double> recovered(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    recovered[static_cast<std::size_t>(i)] = post.mean[i];
  }
  CHECK(gppl::spearman(recovered, truth) >= 0.9);
}
