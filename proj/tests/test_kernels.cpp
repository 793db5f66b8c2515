#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gpcmc/kernels.hpp"
#include "gpcmc/rng.hpp"

using namespace gpcmc;

namespace {

Dataset random_dataset(int n, int d, std::uint64_t seed) {
  const RngStream stream(derive_key(seed, StreamTag::DatasetGen));
  Dataset data;
  data.features.resize(n, d);
  data.labels.resize(n);
  std::uint64_t c = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.features(i, j) = stream.normal(c++);
    data.labels[i] = stream.uniform(c++) < 0.5 ? -1.0 : 1.0;
  }
  return data;
}

}  // namespace

TEST_CASE("RBF diagonal equals beta and coincident points give beta") {
  Dataset data = random_dataset(12, 3, 1);
  data.features.row(5) = data.features.row(2);  // duplicate pattern
  const auto spec = KernelSpec::rbf(0.7, 2.3);
  const Eigen::MatrixXd sigma = covariance_matrix(spec, data.features);
  for (int i = 0; i < 12; ++i) CHECK(sigma(i, i) == 2.3);
  CHECK(sigma(2, 5) == 2.3);
}

TEST_CASE("RBF entry matches direct substitution") {
  // alpha = 1, beta = 1, ||x_i - x_j||^2 = 1  ->  exp(-1)
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const Eigen::MatrixXd sigma = covariance_matrix(KernelSpec::rbf(1.0, 1.0), x);
  CHECK(sigma(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  // alpha enters the exponent squared
  const Eigen::MatrixXd wide = covariance_matrix(KernelSpec::rbf(2.0, 1.0), x);
  CHECK(wide(0, 1) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));
}

TEST_CASE("linear kernel on a single feature column is the outer product") {
  Eigen::MatrixXd x(4, 1);
  x << 0.5, -1.0, 2.0, 0.0;
  const Eigen::MatrixXd sigma = covariance_matrix(KernelSpec::linear(), x);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(sigma(i, j) == x(i, 0) * x(j, 0));
  // rank one
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
  CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
}

TEST_CASE("covariance is bit-exactly symmetric and positive semidefinite") {
  for (std::uint64_t seed : {2, 3, 4, 5, 6}) {
    const Dataset data = random_dataset(25, 4, seed);
    for (const auto spec : {KernelSpec::rbf(1.3, 0.8), KernelSpec::linear()}) {
      const Eigen::MatrixXd sigma = covariance_matrix(spec, data.features);
      CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
      const double max_eig = eig.eigenvalues().maxCoeff();
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * max_eig);
    }
  }
}

TEST_CASE("RBF collapses to beta * identity as alpha -> 0") {
  const Dataset data = random_dataset(10, 2, 9);  // distinct points
  const double beta = 1.7;
  const Eigen::MatrixXd sigma = covariance_matrix(KernelSpec::rbf(1e-6, beta), data.features);
  CHECK((sigma - beta * Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("permuting the patterns permutes the covariance rows and columns") {
  const Dataset data = random_dataset(15, 3, 12);
  const auto spec = KernelSpec::rbf(0.9, 1.1);
  const Eigen::MatrixXd sigma = covariance_matrix(spec, data.features);

  std::vector<int> perm = {3, 0, 14, 7, 1, 2, 9, 13, 4, 5, 12, 6, 8, 11, 10};
  Eigen::MatrixXd permuted_features(15, 3);
  for (int k = 0; k < 15; ++k) permuted_features.row(k) = data.features.row(perm[k]);
  const Eigen::MatrixXd sigma_p = covariance_matrix(spec, permuted_features);
  for (int a = 0; a < 15; ++a)
    for (int b = 0; b < 15; ++b) CHECK(sigma_p(a, b) == sigma(perm[a], perm[b]));
}

TEST_CASE("bundle carries cross and test blocks computed by the same rule") {
  const Dataset data = random_dataset(8, 2, 21);
  const RngStream stream(derive_key(22, StreamTag::DatasetGen));
  Eigen::MatrixXd test(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) test(i, j) = stream.normal(i * 2 + j);

  const auto spec = KernelSpec::rbf(1.0, 1.0);
  const CovarianceBundle bundle = build_covariance(spec, data, test);
  CHECK(bundle.train_count() == 8);
  CHECK(bundle.test_count() == 3);
  CHECK(bundle.test_diag == bundle.test_block.diagonal());
  CHECK(bundle.fingerprint == 0);

  // stacking train + test and building one big matrix must reproduce blocks
  Eigen::MatrixXd all(11, 2);
  all << data.features, test;
  const Eigen::MatrixXd big = covariance_matrix(spec, all);
  CHECK((big.topLeftCorner(8, 8) - bundle.sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((big.topRightCorner(8, 3) - bundle.cross).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((big.bottomRightCorner(3, 3) - bundle.test_block).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validation rejects bad specs and datasets") {
  CHECK_THROWS_AS(validate(KernelSpec::rbf(-1.0, 1.0)), InvalidInputError);
  CHECK_THROWS_AS(validate(KernelSpec::rbf(1.0, 0.0)), InvalidInputError);
  CHECK_NOTHROW(validate(KernelSpec::linear()));

  Dataset bad = random_dataset(5, 2, 30);
  bad.labels[2] = 0.5;
  CHECK_THROWS_AS(validate(bad), InvalidInputError);

  Dataset nan_data = random_dataset(5, 2, 31);
  nan_data.features(1, 1) = std::nan("");
  CHECK_THROWS_AS(validate(nan_data), InvalidInputError);

  Dataset inf_data = random_dataset(5, 2, 32);
  inf_data.features(0, 0) = 1e200;  // self dot product overflows
  CHECK_THROWS_AS(covariance_matrix(KernelSpec::linear(), inf_data.features),
                  InvalidInputError);
}
