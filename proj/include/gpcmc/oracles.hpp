#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpcmc/errors.hpp"
#include "gpcmc/region.hpp"

// Independent ground-truth evaluators used by tests and the experiment
// harness: analytic reductions of special covariance structures, dense
// quadrature for small problems, and brute-force Monte Carlo. None of them
// share code with the sequential orthant estimator they are used to check.

namespace gpcmc::oracles {

enum class QuadratureRule { Trapezoid, GaussLegendre };

/// 1-D quadrature grid for the reduced integrals. The Gaussian weight below
/// 1e-22 outside |u| <= 10 dominates any product of cumulative-normal factors
/// bounded by 1, so the default domain loses nothing at double precision.
struct QuadratureConfig {
  int nodes = 4001;          // odd for trapezoid symmetry
  double half_width = 10.0;  // in u-units, >= 8
  QuadratureRule rule = QuadratureRule::Trapezoid;
};

void validate(const QuadratureConfig& quad);

/// Covariance with 1 on the diagonal and d_i d_j off it; SPD whenever every
/// |d_i| < 1. Its orthant probability reduces to a 1-D integral.
struct RankOneCovarianceSpec {
  Eigen::VectorXd d;

  Eigen::MatrixXd covariance() const;
};

/// log P(v >= 0) for the rank-one-structured covariance, evaluated as
/// (2*pi)^{-1/2} * Int exp(-u^2/2) Prod_i Phi(d_i u / sqrt(1 - d_i^2)) du
/// with the per-node product accumulated in the log domain.
double orthant_rank_one(const RankOneCovarianceSpec& spec, const QuadratureConfig& quad = {});

struct PosteriorOracle {
  double posterior;        // class-1 posterior J*
  double log_denominator;  // log marginal likelihood of the labels
};

/// Exact class-1 posterior and log marginal likelihood for single-feature
/// data under the linear kernel, via the reduced 1-D integrals.
PosteriorOracle linear_kernel_posterior_1d(const Eigen::VectorXd& x_train,
                                           const Eigen::VectorXd& labels, double x_test,
                                           const QuadratureConfig& quad = {});

/// Infinite-length-scale limit of the RBF classifier: a smoothed majority
/// vote that depends only on the class counts and beta.
double soft_count_limit(int n1, int n2, double beta, const QuadratureConfig& quad = {});

struct BruteForceResult {
  double probability;
  double std_error;
};

/// Naive fraction-in-region Monte Carlo for n <= 6. Infeasible beyond small n
/// (the fraction underflows), so larger inputs are refused.
BruteForceResult brute_force_orthant(const Eigen::MatrixXd& covariance,
                                     const std::vector<Region>& region, std::uint64_t seed = 0,
                                     std::int64_t samples = 10'000'000);

/// Deterministic tensor-grid quadrature of the orthant probability after the
/// separation-of-variables transform to the unit cube; full-line dimensions
/// are marginalized analytically first. Limited to 6 constrained dimensions.
double orthant_quadrature(const Eigen::MatrixXd& covariance, const std::vector<Region>& region,
                          int nodes_per_dim = 0);

/// Literal successive-max-normalization evaluation of the rank-one reduction
/// (products renormalized by their running maximum instead of log-domain
/// sums). Exists to pin the equivalence of the two accumulation schemes.
double orthant_rank_one_max_normalized(const RankOneCovarianceSpec& spec,
                                       const QuadratureConfig& quad = {});

}  // namespace gpcmc::oracles
