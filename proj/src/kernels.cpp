#include "gpcmc/kernels.hpp"

#include <cmath>

namespace gpcmc {

namespace {

double squared_distance(const Eigen::Ref<const Eigen::MatrixXd>& a, Eigen::Index i,
                        const Eigen::Ref<const Eigen::MatrixXd>& b, Eigen::Index j) {
  // Explicit difference sum; the norm-expansion shortcut cancels
  // catastrophically for near-identical points.
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    s += d * d;
  }
  return s;
}

double entry(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a, Eigen::Index i,
             const Eigen::Ref<const Eigen::MatrixXd>& b, Eigen::Index j) {
  if (spec.family == KernelFamily::RBF)
    return spec.beta * std::exp(-squared_distance(a, i, b, j) / (spec.alpha * spec.alpha));
  return a.row(i).dot(b.row(j));
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidInputError(std::string(what) + " has non-finite entries");
}

}  // namespace

void validate(const KernelSpec& spec) {
  if (spec.family == KernelFamily::RBF) {
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
      throw InvalidInputError("RBF alpha must be a positive finite real");
    if (!(spec.beta > 0.0) || !std::isfinite(spec.beta))
      throw InvalidInputError("RBF beta must be a positive finite real");
  }
}

void validate(const Dataset& data) {
  const Eigen::Index n = data.features.rows();
  if (n < 1 || data.features.cols() < 1)
    throw InvalidInputError("dataset needs at least one pattern and one feature");
  if (data.labels.size() != n)
    throw InvalidInputError("label count must match pattern count");
  if (!data.features.allFinite()) throw InvalidInputError("features contain non-finite values");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.labels[i] != 1.0 && data.labels[i] != -1.0)
      throw InvalidInputError("labels must be exactly -1 or +1 (pattern " + std::to_string(i) +
                              ")");
  }
}

Eigen::MatrixXd covariance_matrix(const KernelSpec& spec,
                                  const Eigen::Ref<const Eigen::MatrixXd>& features) {
  validate(spec);
  const Eigen::Index n = features.rows();
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = entry(spec, features, i, features, i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = entry(spec, features, i, features, j);
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  check_finite(sigma, "covariance");
  return sigma;
}

CovarianceBundle build_covariance(const KernelSpec& spec, const Dataset& train,
                                  const Eigen::Ref<const Eigen::MatrixXd>& test_features) {
  validate(spec);
  validate(train);
  const Eigen::Index t = test_features.rows();
  if (t > 0 && test_features.cols() != train.features.cols())
    throw InvalidInputError("test feature dimension must match training data");
  if (!test_features.allFinite())
    throw InvalidInputError("test features contain non-finite values");

  CovarianceBundle bundle;
  bundle.sigma = covariance_matrix(spec, train.features);
  bundle.cross.resize(train.features.rows(), t);
  for (Eigen::Index i = 0; i < train.features.rows(); ++i)
    for (Eigen::Index j = 0; j < t; ++j)
      bundle.cross(i, j) = entry(spec, train.features, i, test_features, j);
  bundle.test_block.resize(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    bundle.test_block(i, i) = entry(spec, test_features, i, test_features, i);
    for (Eigen::Index j = i + 1; j < t; ++j) {
      const double v = entry(spec, test_features, i, test_features, j);
      bundle.test_block(i, j) = v;
      bundle.test_block(j, i) = v;
    }
  }
  bundle.test_diag = bundle.test_block.diagonal();
  check_finite(bundle.cross, "cross covariance");
  check_finite(bundle.test_block, "test covariance");
  return bundle;
}

}  // namespace gpcmc
