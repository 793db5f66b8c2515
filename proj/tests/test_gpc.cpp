#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpcmc/gpc.hpp"
#include "gpcmc/oracles.hpp"

using namespace gpcmc;

namespace {

Dataset two_class_line(int n, std::uint64_t seed, double gap = 1.0) {
  const RngStream stream(derive_key(seed, StreamTag::DatasetGen));
  Dataset data;
  data.features.resize(n, 1);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool first = i < (n + 1) / 2;
    data.features(i, 0) = (first ? 0.0 : gap) + 0.3 * stream.normal(static_cast<std::uint64_t>(i));
    data.labels[i] = first ? 1.0 : -1.0;
  }
  return data;
}

// mean posterior and std error of the mean over independent refits
std::pair<double, double> replicated_posterior(const Dataset& train, const KernelSpec& spec,
                                               const Eigen::MatrixXd& test, std::int64_t m,
                                               int reps, std::uint64_t seed0) {
  std::vector<double> values;
  for (int r = 0; r < reps; ++r) {
    EstimatorConfig cfg;
    cfg.samples_per_dim = m;
    cfg.seed = seed0 + static_cast<std::uint64_t>(r);
    const GpcModel model = fit(train, spec, cfg);
    values.push_back(predict(model, prediction_bundle(model, test), 0).posterior);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= reps;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  return {mean, se};
}

}  // namespace

TEST_CASE("reorder: one class stays as given") {
  Dataset data = two_class_line(6, 1);
  data.labels.setOnes();
  const auto [ordered, signs] = reorder(data, OrderingMode::Interleave);
  for (int i = 0; i < 6; ++i) {
    CHECK(signs.permutation[static_cast<std::size_t>(i)] == i);
    CHECK(ordered.features(i, 0) == data.features(i, 0));
  }
}

TEST_CASE("reorder: round-robin interleaving") {
  Dataset data;
  data.features = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
  data.labels.resize(6);
  data.labels << 1, 1, 1, -1, -1, -1;
  const auto [ordered, signs] = reorder(data, OrderingMode::Interleave);
  Eigen::VectorXd expected(6);
  expected << 1, -1, 1, -1, 1, -1;
  CHECK(ordered.labels == expected);
  CHECK(signs.signs == expected);
  // leftovers trail when classes are unbalanced
  Dataset skew;
  skew.features = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  skew.labels.resize(5);
  skew.labels << -1, 1, -1, -1, -1;
  const auto [ordered2, signs2] = reorder(skew, OrderingMode::Interleave);
  Eigen::VectorXd expected2(5);
  expected2 << 1, -1, -1, -1, -1;
  CHECK(ordered2.labels == expected2);
}

TEST_CASE("reorder: seeded shuffle is a deterministic bijection") {
  const Dataset data = two_class_line(20, 2);
  const auto [a, sa] = reorder(data, OrderingMode::SeededShuffle, 42);
  const auto [b, sb] = reorder(data, OrderingMode::SeededShuffle, 42);
  const auto [c, sc] = reorder(data, OrderingMode::SeededShuffle, 43);
  CHECK(sa.permutation == sb.permutation);
  CHECK(sa.permutation != sc.permutation);
  std::vector<int> seen(20, 0);
  for (int p : sa.permutation) ++seen[static_cast<std::size_t>(p)];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("fit on two decoupled patterns recovers 2^-2") {
  Dataset data;
  data.features.resize(2, 1);
  data.features << 0.0, 100.0;  // far apart: RBF covariance is the identity
  data.labels.resize(2);
  data.labels << 1, -1;
  EstimatorConfig cfg;
  cfg.samples_per_dim = 200'000;
  cfg.seed = 3;
  const GpcModel model = fit(data, KernelSpec::rbf(1.0, 1.0), cfg);
  CHECK(std::abs(model.log_marginal - 2.0 * std::log(0.5)) < 4.0 * std::sqrt(2.0 / 200'000.0));
}

TEST_CASE("vanishing latent scale pins the marginal likelihood at 2^-N") {
  const Dataset data = two_class_line(25, 4);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 50'000;
  cfg.seed = 5;
  const GpcModel model = fit(data, KernelSpec::rbf(1.0, 1e-10), cfg);
  CHECK(std::abs(model.log_marginal + 25.0 * std::log(2.0)) <
        4.0 * std::sqrt(25.0 / 50'000.0));
}

TEST_CASE("fit's log marginal equals the orthant estimator on R_train exactly") {
  const Dataset data = two_class_line(12, 6);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 5'000;
  cfg.seed = 7;
  const GpcModel model = fit(data, KernelSpec::rbf(0.8, 1.2), cfg);

  OrthantProblem problem;
  problem.covariance = model.r_train;
  problem.region.assign(12, Region::HalfLinePositive);
  const EstimateReport rep = estimate_log_orthant(problem, cfg);
  CHECK(model.log_marginal == rep.log_integral);  // same code path, bit-for-bit
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) sum += std::log(model.per_dim_p[i]);
  CHECK(model.log_marginal == sum);
}

TEST_CASE("model invariants: inverse quality, particle signs, posterior form") {
  const Dataset data = two_class_line(15, 8);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 4'000;
  cfg.seed = 9;
  const GpcModel model = fit(data, KernelSpec::rbf(1.0, 1.0), cfg);
  CHECK((model.q_final * model.r_train - Eigen::MatrixXd::Identity(15, 15))
            .cwiseAbs()
            .maxCoeff() < 1e-6);
  CHECK(model.particles.values.minCoeff() >= 0.0);

  Eigen::MatrixXd test(1, 1);
  test << 0.4;
  const Prediction pred = predict(model, prediction_bundle(model, test), 0);
  CHECK(pred.posterior >= 0.0);
  CHECK(pred.posterior <= 1.0);
  const double scaled = pred.posterior * static_cast<double>(cfg.samples_per_dim);
  CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
  CHECK(pred.predicted_class == (pred.posterior >= 0.5 ? 1 : -1));
}

TEST_CASE("an uncorrelated test point sits at posterior one half") {
  const Dataset data = two_class_line(10, 10);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 100'000;
  cfg.seed = 11;
  const double beta = 1.3;
  const GpcModel model = fit(data, KernelSpec::rbf(0.5, beta), cfg);
  Eigen::MatrixXd far(1, 1);
  far << 1e6;  // cross covariance underflows to zero
  const Prediction pred = predict(model, prediction_bundle(model, far), 0);
  CHECK(pred.test_cond_var == doctest::Approx(1.0 + beta).epsilon(1e-9));
  CHECK(std::abs(pred.posterior - 0.5) < 4.0 * std::sqrt(0.25 / 100'000.0));
}

TEST_CASE("bundles from a different ordering or kernel are rejected") {
  const Dataset data = two_class_line(8, 12);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 1'000;
  cfg.seed = 13;
  const GpcModel model = fit(data, KernelSpec::rbf(1.0, 1.0), cfg);
  Eigen::MatrixXd test(1, 1);
  test << 0.2;

  CovarianceBundle raw = build_covariance(model.kernel, model.ordered_train, test);
  CHECK_THROWS_AS(predict(model, raw, 0), ContractError);  // fingerprint 0

  const GpcModel other = fit(data, KernelSpec::rbf(2.0, 1.0), cfg);
  CHECK_THROWS_AS(predict(model, prediction_bundle(other, test), 0), ContractError);

  CHECK_NOTHROW(predict(model, prediction_bundle(model, test), 0));
}

TEST_CASE("flipping every label mirrors the posterior") {
  Dataset data = two_class_line(24, 14);
  Eigen::MatrixXd test(1, 1);
  test << 0.35;
  Dataset flipped = data;
  flipped.labels = -flipped.labels;

  const auto [p_pos, se_pos] =
      replicated_posterior(data, KernelSpec::linear(), test, 30'000, 6, 100);
  const auto [p_neg, se_neg] =
      replicated_posterior(flipped, KernelSpec::linear(), test, 30'000, 6, 200);
  const double se = std::sqrt(se_pos * se_pos + se_neg * se_neg);
  CHECK(std::abs(p_pos - (1.0 - p_neg)) < 3.0 * se);

  // and the oracle symmetry is exact
  const auto a = oracles::linear_kernel_posterior_1d(data.features.col(0), data.labels, 0.35);
  const auto b =
      oracles::linear_kernel_posterior_1d(flipped.features.col(0), flipped.labels, 0.35);
  CHECK(a.posterior == doctest::Approx(1.0 - b.posterior).epsilon(1e-10));
}

TEST_CASE("the posterior is the ratio of the two orthant integrals") {
  const Dataset data = two_class_line(4, 16);
  Eigen::MatrixXd test(1, 1);
  test << 0.55;
  const auto spec = KernelSpec::rbf(1.0, 0.9);
  const auto [p_mc, se] = replicated_posterior(data, spec, test, 50'000, 6, 300);

  // dense quadrature of I1 (all five dims constrained) and I2 (test dim free)
  EstimatorConfig cfg;
  cfg.samples_per_dim = 1'000;
  cfg.seed = 1;
  const GpcModel model = fit(data, spec, cfg);
  const CovarianceBundle bundle = prediction_bundle(model, test);
  Eigen::MatrixXd big(5, 5);
  big.topLeftCorner(4, 4) = model.r_train;
  const Eigen::VectorXd signed_cross =
      (model.ordered_train.labels.array() * bundle.cross.col(0).array()).matrix();
  big.topRightCorner(4, 1) = signed_cross;
  big.bottomLeftCorner(1, 4) = signed_cross.transpose();
  big(4, 4) = 1.0 + bundle.test_diag[0];

  std::vector<Region> all_pos(5, Region::HalfLinePositive);
  std::vector<Region> train_only = all_pos;
  train_only[4] = Region::FullLine;
  const double i1 = oracles::orthant_quadrature(big, all_pos);
  const double i2 = oracles::orthant_quadrature(big, train_only);
  CHECK(std::abs(p_mc - i1 / i2) < 3.0 * se);
}

TEST_CASE("degenerate hyperparameters drive every posterior to one half") {
  const Dataset data = two_class_line(16, 18);
  Eigen::MatrixXd test(2, 1);
  test << 0.1, 0.9;
  EstimatorConfig cfg;
  cfg.samples_per_dim = 20'000;
  cfg.seed = 19;
  const GpcModel model = fit(data, KernelSpec::rbf(1e-8, 1.0), cfg);
  const CovarianceBundle bundle = prediction_bundle(model, test);
  for (int t = 0; t < 2; ++t)
    CHECK(std::abs(predict(model, bundle, t).posterior - 0.5) < 0.03);
}

TEST_CASE("huge length scale degenerates into soft counting") {
  const Dataset data = two_class_line(13, 20);  // 7 of class 1, 6 of class 2
  Eigen::MatrixXd test(1, 1);
  test << 0.31;
  const double beta = 1.0;
  const auto [p_mc, se] =
      replicated_posterior(data, KernelSpec::rbf(1e6, beta), test, 30'000, 6, 400);
  const double p_soft = oracles::soft_count_limit(7, 6, beta);
  CHECK(std::abs(p_mc - p_soft) < 3.0 * std::max(se, 1e-4));
}

TEST_CASE("tune ranks by log marginal likelihood with failures last") {
  const Dataset data = two_class_line(14, 22);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 5'000;
  cfg.seed = 23;

  SUBCASE("grid of one") {
    const auto ranked = tune(data, {KernelSpec::rbf(1.0, 1.0)}, cfg);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].ok);
    CHECK(std::isfinite(ranked[0].log_marginal));
  }

  SUBCASE("degenerate latent scale ranks below a moderate one") {
    const auto ranked = tune(data, {KernelSpec::rbf(1.0, 1e-10), KernelSpec::rbf(0.7, 1.0)}, cfg);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].spec.beta == 1.0);
    CHECK(ranked[1].spec.beta == 1e-10);
    CHECK(std::abs(ranked[1].log_marginal + 14.0 * std::log(2.0)) < 0.2);
  }

  SUBCASE("the six benchmark hyperparameter sets all complete") {
    const std::vector<KernelSpec> grid = {
        KernelSpec::rbf(5.0, 1.0), KernelSpec::rbf(5.0, 5.0), KernelSpec::rbf(3.0, 2.0),
        KernelSpec::rbf(0.5, 0.5), KernelSpec::rbf(3.0, 1.0), KernelSpec::rbf(0.5, 3.0)};
    const auto ranked = tune(data, grid, cfg);
    CHECK(ranked.size() == 6);
    for (const auto& entry : ranked) CHECK(entry.ok);
    for (std::size_t i = 1; i < ranked.size(); ++i)
      CHECK(ranked[i - 1].log_marginal >= ranked[i].log_marginal);
  }

  SUBCASE("invalid cells rank last with a reason") {
    const auto ranked = tune(data, {KernelSpec::rbf(-1.0, 1.0), KernelSpec::rbf(1.0, 1.0)}, cfg);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].ok);
    CHECK(!ranked[1].ok);
    CHECK(!ranked[1].message.empty());
  }

  SUBCASE("all cells failing raises") {
    CHECK_THROWS_AS(tune(data, {KernelSpec::rbf(-1.0, 1.0)}, cfg), TunerError);
  }
}

TEST_CASE("interleaving keeps acceptance ratios nearer one half than class-sorted order") {
  // class-sorted data produces extreme conditional acceptance ratios; the
  // plug-in dispersion sum (1-P)/P picks that up
  const Dataset data = two_class_line(60, 26, 1.0);  // already sorted by class
  EstimatorConfig cfg;
  cfg.samples_per_dim = 20'000;
  cfg.seed = 27;
  const GpcModel sorted = fit(data, KernelSpec::rbf(1.0, 1.0), cfg, OrderingMode::AsGiven);
  const GpcModel interleaved =
      fit(data, KernelSpec::rbf(1.0, 1.0), cfg, OrderingMode::Interleave);
  const auto dispersion = [](const GpcModel& model) {
    return ((1.0 - model.per_dim_p.array()) / model.per_dim_p.array()).sum();
  };
  CHECK(dispersion(interleaved) < dispersion(sorted));
}

TEST_CASE("fit insists on a single unchunked pass") {
  const Dataset data = two_class_line(6, 30);
  EstimatorConfig cfg;
  cfg.samples_per_dim = 1'000;
  cfg.replicates = 2;
  CHECK_THROWS_AS(fit(data, KernelSpec::linear(), cfg), InvalidInputError);
  cfg.replicates = 1;
  cfg.chunk_size = 500;
  CHECK_THROWS_AS(fit(data, KernelSpec::linear(), cfg), InvalidInputError);
}

TEST_CASE("refits and repeated predictions are deterministic") {
  const Dataset data = two_class_line(9, 32);
  Eigen::MatrixXd test(3, 1);
  test << 0.0, 0.5, 1.0;
  EstimatorConfig cfg;
  cfg.samples_per_dim = 8'000;
  cfg.seed = 33;
  const GpcModel a = fit(data, KernelSpec::linear(), cfg);
  const GpcModel b = fit(data, KernelSpec::linear(), cfg);
  CHECK(a.log_marginal == b.log_marginal);
  const CovarianceBundle bundle_a = prediction_bundle(a, test);
  const CovarianceBundle bundle_b = prediction_bundle(b, test);
  // prediction of index 2 does not depend on which indices were drawn before
  const double direct = predict(a, bundle_a, 2).posterior;
  predict(b, bundle_b, 0);
  predict(b, bundle_b, 1);
  CHECK(predict(b, bundle_b, 2).posterior == direct);
}
