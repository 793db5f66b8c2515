#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gpcmc/errors.hpp"
#include "gpcmc/gauss_linalg.hpp"
#include "gpcmc/region.hpp"
#include "gpcmc/rng.hpp"

// Sequential rejection-plus-bootstrap Monte Carlo estimator for log orthant
// probabilities of a zero-mean multivariate Gaussian. One sweep over the
// dimensions: draw M points from each conditional, record the acceptance
// fraction of the constrained half-line, drop the rejects, bootstrap the
// survivors back to M, move on. The log integral is the sum of the log
// acceptance fractions.

namespace gpcmc {

/// Zero-mean Gaussian with per-dimension region spec. FullLine dimensions are
/// unconstrained: they contribute acceptance ratio exactly 1 and skip the
/// reject/resample step, but their draws still feed later conditioning.
struct OrthantProblem {
  Eigen::MatrixXd covariance;  // SPD
  std::vector<Region> region;  // at least one HalfLinePositive entry

  Eigen::Index dim() const { return covariance.rows(); }
};

void validate(const OrthantProblem& problem);

struct EstimatorConfig {
  std::int64_t samples_per_dim = 100'000;  // M >= 100
  std::uint64_t seed = 0;
  std::int64_t chunk_size = 0;  // max M held in memory per pass; 0 = M
  int replicates = 1;
  int threads = 1;  // worker cap; 0 = all hardware threads

  std::int64_t resolved_chunk() const {
    return chunk_size == 0 ? samples_per_dim : chunk_size;
  }
};

void validate(const EstimatorConfig& cfg);

/// M surviving sample strings over the first `current_dim` dimensions.
/// Column j holds coordinate j of every string; rows stay aligned across
/// columns through compaction and resampling.
struct ParticleEnsemble {
  Eigen::MatrixXd values;  // M x capacity; leftCols(current_dim) is live
  Eigen::Index current_dim = 0;

  Eigen::Index rows() const { return values.rows(); }
};

/// Replaces rejected rows by uniform-with-replacement draws from the accepted
/// ones: survivors keep their relative order at the top, the replacements are
/// appended below. Index draws come from `stream` at counters
/// counter_base, counter_base+1, ... Throws EmptyEnsembleError when nothing
/// was accepted.
ParticleEnsemble resample(const ParticleEnsemble& ensemble,
                          const std::vector<std::uint8_t>& accepted_mask,
                          const RngStream& stream, std::uint64_t counter_base = 0);

struct EstimateReport {
  double log_integral = 0.0;       // -inf when a dimension died
  Eigen::VectorXd per_dim_accept;  // P-hat per dim, 1.0 for FullLine
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> accepted_counts;  // M1(i) per dim
  double bias_estimate = 0.0;       // plug-in first-order bias of log I-hat
  double variance_estimate = 0.0;   // plug-in variance of log I-hat
  std::optional<int> failed_dim;    // 0-based dim where M1 hit zero

  // Multi-pass combination (chunked_estimate only).
  int passes = 1;
  int failed_passes = 0;
  std::optional<double> replicate_std_error;  // empirical, across passes
};

/// One full pass with exactly cfg.samples_per_dim points. Deterministic for a
/// fixed seed regardless of cfg.threads.
EstimateReport estimate_log_orthant(const OrthantProblem& problem, const EstimatorConfig& cfg);

/// Runs cfg.replicates independent passes (each further split so no pass
/// exceeds cfg.chunk_size points) and averages the integral estimates in the
/// probability domain with a log-stable mean. Failed passes are dropped from
/// the average and counted.
EstimateReport chunked_estimate(const OrthantProblem& problem, const EstimatorConfig& cfg);

/// Pass internals exposed for the classifier, which needs the surviving
/// particles and the final inverse for incremental test conditioning.
struct OrthantPassResult {
  EstimateReport report;
  ParticleEnsemble particles;
  Eigen::MatrixXd q_final;  // n x n inverse of the covariance, from the recursion
};

OrthantPassResult run_orthant_pass(const OrthantProblem& problem, std::int64_t samples,
                                   std::uint64_t seed, std::uint64_t pass_index = 0,
                                   int threads = 1);

}  // namespace gpcmc
