#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gpcmc/kernels.hpp"

// Benchmark harness: synthetic problem generation, estimator-vs-oracle metric
// computation, and CSV table emission.

namespace gpcmc::experiments {

/// Two-class single-feature Gaussian problem. Half of each set is class 1
/// (the remainder of an odd count going to class 1), the rest class 2.
struct SyntheticProblemSpec {
  int n_train = 100;
  int n_test = 50;
  double mu1 = 0.0, mu2 = 1.0;
  double sd1 = 0.2, sd2 = 0.3;
  std::uint64_t seed = 0;
};

void validate(const SyntheticProblemSpec& spec);

struct GeneratedProblem {
  Dataset train;
  Eigen::MatrixXd test_features;  // n_test x 1
};

GeneratedProblem generate_problem(const SyntheticProblemSpec& spec);

enum class Metric { MapeLogIntegral, MaePosterior, MapeLogMarginal };

const char* metric_name(Metric metric);

struct MetricReport {
  Metric metric = Metric::MapeLogIntegral;
  double value = 0.0;      // mean of per_run
  double std_error = 0.0;  // sample sd of per_run / sqrt(runs)
  int runs = 0;
  std::vector<double> per_run;
};

MetricReport summarize(Metric metric, const std::vector<double>& per_run);

struct ExperimentCell {
  std::string label;  // e.g. "N=50" or "problem1"
  int dimension = 0;  // integration dimension / training-set size
  std::int64_t m_samples = 0;
  MetricReport report;
  double seconds = 0.0;  // wall clock spent in the estimator for this cell
  int failures = 0;      // runs dropped because the estimator lost every sample
};

/// Rank-one integration benchmark: for every (N, M) cell, problems_per_cell
/// random d-vectors (components uniform on [-1,1], fixed per (N, problem)
/// across all M), estimator log-integral vs the 1-D reduction oracle, MAPE of
/// the logs. Passes above one million points per sweep are split and
/// averaged.
std::vector<ExperimentCell> run_experiment1(const std::vector<int>& dims,
                                            const std::vector<std::int64_t>& m_values,
                                            int problems_per_cell, std::uint64_t seed,
                                            int threads = 1);

struct Experiment2Result {
  std::vector<ExperimentCell> mae_posterior;      // table of posterior MAE
  std::vector<ExperimentCell> mape_log_marginal;  // table of log-marginal MAPE
};

/// Classification benchmark: per (problem, M), `runs` independent fit+predict
/// sweeps with the linear kernel on interleaved data, posteriors compared to
/// the exact 1-D reduction and the log marginal likelihood to its oracle
/// denominator.
Experiment2Result run_experiment2(const std::vector<SyntheticProblemSpec>& problems,
                                  const std::vector<std::int64_t>& m_values, int runs,
                                  std::uint64_t seed, int threads = 1);

/// The four benchmark problem definitions used by run_experiment2 defaults.
std::vector<SyntheticProblemSpec> standard_problems(std::uint64_t seed);

/// One row per cell: label,dimension,m_samples,metric,value,std_error,runs,
/// seconds. Header row always present, values in full-precision scientific
/// notation.
void write_cells_csv(std::ostream& out, const std::vector<ExperimentCell>& cells);

}  // namespace gpcmc::experiments
