#pragma once

#include <Eigen/Dense>

#include "gpcmc/errors.hpp"
#include "gpcmc/kernels.hpp"

// Recursive conditional-Gaussian moment engine. For a zero-mean Gaussian with
// SPD covariance R, the distribution of coordinate i given the first i-1 is
//   N(b_i' v_{1:i-1}, sigma_i^2),
// and the triple (Q_i = inverse of the leading block, b_i, sigma_i^2) advances
// from step i to i+1 with a rank-one partitioned-inverse update in O(i^2)
// instead of a fresh O(i^3) factorization.

namespace gpcmc {

/// Conditional variances below this multiple of the diagonal entry abort the
/// recursion; the +I term in every estimator covariance keeps valid inputs
/// far above it, so hitting the floor signals a caller bug.
inline constexpr double kCondVarFloor = 1e-12;

struct ConditionalMomentsState {
  int step_index = 1;     // i >= 1; q_inv covers dims 1..i-1
  Eigen::MatrixXd q_inv;  // (i-1) x (i-1), symmetric
  Eigen::VectorXd b;      // length i-1
  double cond_var = 0.0;  // sigma_i^2 > 0
};

/// State for step 1: empty history, cond_var = R(0,0).
ConditionalMomentsState initial_moments(const Eigen::Ref<const Eigen::MatrixXd>& R);

/// The i x i inverse Q_{i+1} of the leading block, grown from step i's
/// (Q_i, b_i, sigma_i^2) by the rank-one block update and re-symmetrized
/// ((Q+Q')/2) to stop drift over long chains.
Eigen::MatrixXd expand_inverse(const ConditionalMomentsState& state);

/// Advances step i -> i+1: expand_inverse plus the new conditional moments
/// against column i+1 of R.
ConditionalMomentsState advance_moments(const ConditionalMomentsState& state,
                                        const Eigen::Ref<const Eigen::MatrixXd>& R);

struct DirectMoments {
  Eigen::VectorXd b;
  double cond_var;
};

/// Same moments via a fresh factorization of the leading principal block;
/// O(i^3), kept as the independent check of the recursion. i is 1-based,
/// 2 <= i <= dim(R).
DirectMoments direct_moments(const Eigen::Ref<const Eigen::MatrixXd>& R, int i);

/// Intermediate quantities of the partitioned-inverse identity relating the
/// integrand precision A to the covariance R = I + A12 Sigma' A12.
struct AppendixWorkspace {
  Eigen::VectorXd a;      // Sigma^{-1} Sigma_{Xx*}
  double sigma_star_sq;   // conditional test variance under the prior
  Eigen::MatrixXd a12;    // diag(1, C')
  Eigen::MatrixXd a22;    // lower-right block of the precision D
  Eigen::MatrixXd A;      // I - A12 A22^{-1} A12
  double q;               // sigma*^2 + b' B^{-1} b (rank-one inversion scalar)
};

/// Builds the workspace for test pattern `test_index` of the bundle.
AppendixWorkspace build_appendix_workspace(const CovarianceBundle& bundle,
                                           const Eigen::Ref<const Eigen::VectorXd>& labels,
                                           Eigen::Index test_index = 0);

/// max |(A R - I)_jk| over all test patterns in the bundle. Zero in exact
/// arithmetic; the numerical residual certifies the identity on real inputs.
double verify_appendix_identity(const CovarianceBundle& bundle,
                                const Eigen::Ref<const Eigen::VectorXd>& labels);

}  // namespace gpcmc
