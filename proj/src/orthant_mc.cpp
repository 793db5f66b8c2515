#include "gpcmc/orthant_mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gpcmc/parallel.hpp"

namespace gpcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Eigen::Index> accepted_indices(const std::vector<std::uint8_t>& mask) {
  std::vector<Eigen::Index> acc;
  acc.reserve(mask.size());
  for (std::size_t m = 0; m < mask.size(); ++m)
    if (mask[m]) acc.push_back(static_cast<Eigen::Index>(m));
  return acc;
}

// Survivors compacted to the top in their original order, rejected rows
// replaced by draws (with replacement) from the survivors. Sources of the
// compaction satisfy acc[k] >= k, so ascending in-place moves are safe.
void resample_in_place(ParticleEnsemble& ensemble, const std::vector<std::uint8_t>& accepted_mask,
                       const RngStream& stream, std::uint64_t counter_base) {
  const Eigen::Index m_total = ensemble.rows();
  if (static_cast<Eigen::Index>(accepted_mask.size()) != m_total)
    throw InvalidInputError("acceptance mask length must match ensemble rows");
  const std::vector<Eigen::Index> acc = accepted_indices(accepted_mask);
  const auto m1 = static_cast<Eigen::Index>(acc.size());
  if (m1 == 0) throw EmptyEnsembleError("no accepted rows to resample from");
  if (m1 == m_total) return;

  std::vector<Eigen::Index> src(static_cast<std::size_t>(m_total - m1));
  for (std::size_t t = 0; t < src.size(); ++t)
    src[t] = static_cast<Eigen::Index>(
        stream.index(counter_base + t, static_cast<std::uint64_t>(m1)));

  for (Eigen::Index j = 0; j < ensemble.current_dim; ++j) {
    auto col = ensemble.values.col(j);
    for (Eigen::Index k = 0; k < m1; ++k) col[k] = col[acc[static_cast<std::size_t>(k)]];
    for (std::size_t t = 0; t < src.size(); ++t)
      col[m1 + static_cast<Eigen::Index>(t)] = col[src[t]];
  }
}

void finish_diagnostics(EstimateReport& report, const OrthantProblem& problem,
                        std::int64_t samples) {
  const double m = static_cast<double>(samples);
  double log_integral = 0.0, bias = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < problem.dim(); ++i) {
    if (problem.region[static_cast<std::size_t>(i)] != Region::HalfLinePositive) continue;
    const double p = report.per_dim_accept[i];
    if (p <= 0.0) {
      log_integral = kNegInf;
      continue;
    }
    log_integral += std::log(p);
    bias += (1.0 - p) / (2.0 * p);
    var += (1.0 - p) / p;
  }
  report.log_integral = log_integral;
  report.bias_estimate = -bias / m;
  report.variance_estimate = var / m;
}

}  // namespace

void validate(const OrthantProblem& problem) {
  const Eigen::Index n = problem.covariance.rows();
  if (n < 1 || problem.covariance.cols() != n)
    throw InvalidInputError("covariance must be square and non-empty");
  if (!problem.covariance.allFinite())
    throw InvalidInputError("covariance has non-finite entries");
  if (static_cast<Eigen::Index>(problem.region.size()) != n)
    throw InvalidInputError("region spec length must match covariance dimension");
  const double scale = std::max(1.0, problem.covariance.array().abs().maxCoeff());
  const double asym =
      (problem.covariance - problem.covariance.transpose()).array().abs().maxCoeff();
  if (asym > 1e-12 * scale) throw InvalidInputError("covariance is not symmetric");
  if (std::none_of(problem.region.begin(), problem.region.end(),
                   [](Region r) { return r == Region::HalfLinePositive; }))
    throw InvalidInputError("at least one dimension must be constrained");
}

void validate(const EstimatorConfig& cfg) {
  if (cfg.samples_per_dim < 100) throw InvalidInputError("samples_per_dim must be >= 100");
  if (cfg.chunk_size != 0 &&
      (cfg.chunk_size < 100 || cfg.chunk_size > cfg.samples_per_dim))
    throw InvalidInputError("chunk_size must lie in [100, samples_per_dim]");
  if (cfg.replicates < 1) throw InvalidInputError("replicates must be >= 1");
  if (cfg.threads < 0) throw InvalidInputError("threads must be >= 0");
}

ParticleEnsemble resample(const ParticleEnsemble& ensemble,
                          const std::vector<std::uint8_t>& accepted_mask,
                          const RngStream& stream, std::uint64_t counter_base) {
  ParticleEnsemble out = ensemble;
  resample_in_place(out, accepted_mask, stream, counter_base);
  return out;
}

OrthantPassResult run_orthant_pass(const OrthantProblem& problem, std::int64_t samples,
                                   std::uint64_t seed, std::uint64_t pass_index, int threads) {
  validate(problem);
  const Eigen::Index n = problem.dim();
  const Eigen::Index m_total = static_cast<Eigen::Index>(samples);

  OrthantPassResult result;
  result.particles.values.resize(m_total, n);
  result.particles.current_dim = 0;
  result.report.per_dim_accept = Eigen::VectorXd::Zero(n);
  result.report.accepted_counts.setZero(n);

  ConditionalMomentsState state = initial_moments(problem.covariance);
  Eigen::VectorXd mean(m_total);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(m_total));

  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == 0)
      mean.setZero();
    else
      mean.noalias() = result.particles.values.leftCols(i) * state.b;
    const double sd = std::sqrt(state.cond_var);

    const RngStream stream(derive_key(seed, StreamTag::OrthantPass,
                                      {pass_index, static_cast<std::uint64_t>(i)}));
    auto col = result.particles.values.col(i);
    parallel_for(m_total, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t m = lo; m < hi; ++m)
        col[m] = mean[m] + sd * stream.normal(static_cast<std::uint64_t>(m));
    });
    result.particles.current_dim = i + 1;

    if (problem.region[static_cast<std::size_t>(i)] == Region::HalfLinePositive) {
      Eigen::Index accepted = 0;
      for (Eigen::Index m = 0; m < m_total; ++m) {
        mask[static_cast<std::size_t>(m)] = col[m] >= 0.0;
        accepted += mask[static_cast<std::size_t>(m)];
      }
      result.report.accepted_counts[i] = accepted;
      if (accepted == 0) {
        result.report.failed_dim = static_cast<int>(i);
        finish_diagnostics(result.report, problem, samples);
        return result;
      }
      result.report.per_dim_accept[i] =
          static_cast<double>(accepted) / static_cast<double>(m_total);
      resample_in_place(result.particles, mask, stream,
                        static_cast<std::uint64_t>(m_total));
    } else {
      result.report.accepted_counts[i] = m_total;
      result.report.per_dim_accept[i] = 1.0;
    }

    if (i + 1 < n)
      state = advance_moments(state, problem.covariance);
    else
      result.q_final = expand_inverse(state);
  }

  finish_diagnostics(result.report, problem, samples);
  return result;
}

EstimateReport estimate_log_orthant(const OrthantProblem& problem, const EstimatorConfig& cfg) {
  validate(cfg);
  return run_orthant_pass(problem, cfg.samples_per_dim, cfg.seed, 0, cfg.threads).report;
}

EstimateReport chunked_estimate(const OrthantProblem& problem, const EstimatorConfig& cfg) {
  validate(cfg);
  validate(problem);
  const std::int64_t chunk = cfg.resolved_chunk();
  const auto splits = (cfg.samples_per_dim + chunk - 1) / chunk;
  const std::int64_t base = cfg.samples_per_dim / splits;
  const std::int64_t extra = cfg.samples_per_dim % splits;

  struct Pass {
    std::int64_t size;
    EstimateReport report;
  };
  std::vector<Pass> passes;
  for (int r = 0; r < cfg.replicates; ++r)
    for (std::int64_t k = 0; k < splits; ++k) passes.push_back({base + (k < extra ? 1 : 0), {}});

  const auto total = static_cast<std::int64_t>(passes.size());
  if (total == 1) return run_orthant_pass(problem, passes[0].size, cfg.seed, 0, cfg.threads).report;

  parallel_for(
      total, cfg.threads,
      [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p)
          passes[static_cast<std::size_t>(p)].report =
              run_orthant_pass(problem, passes[static_cast<std::size_t>(p)].size, cfg.seed,
                               static_cast<std::uint64_t>(p), 1)
                  .report;
      },
      /*grain=*/2);

  EstimateReport combined;
  combined.passes = static_cast<int>(total);
  combined.per_dim_accept = Eigen::VectorXd::Zero(problem.dim());
  combined.accepted_counts.setZero(problem.dim());

  std::vector<double> logs;
  for (const Pass& p : passes) {
    if (p.report.failed_dim) {
      ++combined.failed_passes;
      if (!combined.failed_dim) combined.failed_dim = p.report.failed_dim;
      continue;
    }
    logs.push_back(p.report.log_integral);
    combined.per_dim_accept += p.report.per_dim_accept;
    combined.accepted_counts += p.report.accepted_counts;
    combined.bias_estimate += p.report.bias_estimate;
    combined.variance_estimate += p.report.variance_estimate;
  }
  const auto good = static_cast<double>(logs.size());
  if (logs.empty()) {
    combined.log_integral = kNegInf;
    return combined;
  }
  combined.failed_dim.reset();

  // Probability-domain mean, stable in the log domain.
  const double peak = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - peak);
  combined.log_integral = peak + std::log(acc) - std::log(good);

  combined.per_dim_accept /= good;
  combined.bias_estimate /= good;           // per-pass plug-in bias does not average out
  combined.variance_estimate /= good * good;  // variance of the mean of `good` passes

  if (logs.size() >= 2) {
    const double mean_log =
        std::accumulate(logs.begin(), logs.end(), 0.0) / good;
    double ss = 0.0;
    for (double v : logs) ss += (v - mean_log) * (v - mean_log);
    combined.replicate_std_error = std::sqrt(ss / (good - 1.0) / good);
  }
  return combined;
}

}  // namespace gpcmc
