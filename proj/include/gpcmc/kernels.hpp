#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gpcmc/errors.hpp"

namespace gpcmc {

enum class KernelFamily { RBF, Linear };

/// Covariance hyperparameters. The RBF family is
///   k(x, x') = beta * exp(-||x - x'||^2 / alpha^2)
/// with alpha the length scale and beta the latent function scale; the linear
/// family is the plain dot product and takes no hyperparameters.
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double alpha = 1.0;
  double beta = 1.0;

  static KernelSpec rbf(double alpha, double beta) {
    return {KernelFamily::RBF, alpha, beta};
  }
  static KernelSpec linear() { return {KernelFamily::Linear, 0.0, 0.0}; }
};

void validate(const KernelSpec& spec);

/// Training patterns as rows, one ±1 label per row.
struct Dataset {
  Eigen::MatrixXd features;  // N x d
  Eigen::VectorXd labels;    // entries exactly -1 or +1
};

void validate(const Dataset& data);

/// All covariance blocks between training and test patterns:
/// sigma = K(X, X), cross = K(X, X*), test_diag / test_block = K(X*, X*).
/// The fingerprint is 0 when the bundle was built outside a fitted model's
/// ordering (see gpc.hpp).
struct CovarianceBundle {
  Eigen::MatrixXd sigma;       // N x N
  Eigen::MatrixXd cross;       // N x T
  Eigen::VectorXd test_diag;   // T
  Eigen::MatrixXd test_block;  // T x T
  std::uint64_t fingerprint = 0;

  Eigen::Index train_count() const { return sigma.rows(); }
  Eigen::Index test_count() const { return cross.cols(); }
};

/// Builds every block of the composite covariance from feature data.
/// Entries are explicit pairwise evaluations (squared distances summed
/// directly, upper triangle mirrored), so sigma is bit-exactly symmetric and
/// its diagonal equals beta (RBF) or ||x_i||^2 (linear).
/// Pure; safe to call concurrently.
CovarianceBundle build_covariance(const KernelSpec& spec, const Dataset& train,
                                  const Eigen::Ref<const Eigen::MatrixXd>& test_features);

/// Training-block-only convenience: K(X, X).
Eigen::MatrixXd covariance_matrix(const KernelSpec& spec,
                                  const Eigen::Ref<const Eigen::MatrixXd>& features);

}  // namespace gpcmc
