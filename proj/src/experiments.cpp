#include "gpcmc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gpcmc/gpc.hpp"
#include "gpcmc/oracles.hpp"
#include "gpcmc/orthant_mc.hpp"
#include "gpcmc/parallel.hpp"

namespace gpcmc::experiments {

namespace {

// Sweeps above this size are split into averaged sub-passes so the particle
// matrix stays bounded.
constexpr std::int64_t kMaxPassSize = 1'000'000;

constexpr std::uint64_t kExp1Tag = 1;
constexpr std::uint64_t kExp2Tag = 2;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}

}  // namespace

void validate(const SyntheticProblemSpec& spec) {
  if (spec.n_train < 1 || spec.n_test < 0)
    throw InvalidInputError("problem needs n_train >= 1 and n_test >= 0");
  if (!(spec.sd1 > 0.0) || !(spec.sd2 > 0.0))
    throw InvalidInputError("class standard deviations must be positive");
}

GeneratedProblem generate_problem(const SyntheticProblemSpec& spec) {
  validate(spec);
  const RngStream stream(derive_key(spec.seed, StreamTag::DatasetGen));
  std::uint64_t counter = 0;
  const auto fill = [&](Eigen::MatrixXd& features, Eigen::VectorXd* labels, int count) {
    features.resize(count, 1);
    if (labels) labels->resize(count);
    const int n1 = (count + 1) / 2;
    for (int i = 0; i < count; ++i) {
      const bool first_class = i < n1;
      const double mu = first_class ? spec.mu1 : spec.mu2;
      const double sd = first_class ? spec.sd1 : spec.sd2;
      features(i, 0) = mu + sd * stream.normal(counter++);
      if (labels) (*labels)[i] = first_class ? 1.0 : -1.0;
    }
  };
  GeneratedProblem out;
  fill(out.train.features, &out.train.labels, spec.n_train);
  fill(out.test_features, nullptr, spec.n_test);
  return out;
}

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::MapeLogIntegral: return "mape_log_integral";
    case Metric::MaePosterior: return "mae_posterior";
    case Metric::MapeLogMarginal: return "mape_log_marginal";
  }
  return "unknown";
}

MetricReport summarize(Metric metric, const std::vector<double>& per_run) {
  MetricReport report;
  report.metric = metric;
  report.per_run = per_run;
  report.runs = static_cast<int>(per_run.size());
  if (per_run.empty()) return report;
  double sum = 0.0;
  for (double v : per_run) sum += v;
  report.value = sum / report.runs;
  if (report.runs >= 2) {
    double ss = 0.0;
    for (double v : per_run) ss += (v - report.value) * (v - report.value);
    report.std_error = std::sqrt(ss / (report.runs - 1)) / std::sqrt(double(report.runs));
  }
  return report;
}

std::vector<ExperimentCell> run_experiment1(const std::vector<int>& dims,
                                            const std::vector<std::int64_t>& m_values,
                                            int problems_per_cell, std::uint64_t seed,
                                            int threads) {
  if (dims.empty() || m_values.empty() || problems_per_cell < 1)
    throw InvalidInputError("experiment 1 needs dimensions, sample counts, and problems");

  std::vector<ExperimentCell> cells;
  oracles::QuadratureConfig quad;
  quad.nodes = 8001;

  for (int n : dims) {
    // Problems are fixed per dimension and reused across every M.
    std::vector<OrthantProblem> problems;
    std::vector<double> truths;
    for (int p = 0; p < problems_per_cell; ++p) {
      const RngStream stream(derive_key(seed, StreamTag::ProblemGen,
                                        {kExp1Tag, static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(p)}));
      oracles::RankOneCovarianceSpec spec;
      spec.d.resize(n);
      for (int i = 0; i < n; ++i)
        spec.d[i] = 2.0 * stream.uniform(static_cast<std::uint64_t>(i)) - 1.0;
      truths.push_back(oracles::orthant_rank_one(spec, quad));
      OrthantProblem problem;
      problem.covariance = spec.covariance();
      problem.region.assign(static_cast<std::size_t>(n), Region::HalfLinePositive);
      problems.push_back(std::move(problem));
    }

    for (std::int64_t m : m_values) {
      ExperimentCell cell;
      cell.label = "N=" + std::to_string(n);
      cell.dimension = n;
      cell.m_samples = m;
      std::vector<double> ape(static_cast<std::size_t>(problems_per_cell), -1.0);
      const auto start = std::chrono::steady_clock::now();
      parallel_for(
          problems_per_cell, threads,
          [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t p = lo; p < hi; ++p) {
              EstimatorConfig cfg;
              cfg.samples_per_dim = m;
              cfg.chunk_size = std::min(m, kMaxPassSize);
              cfg.seed = derive_key(seed, StreamTag::SeedDerive,
                                    {kExp1Tag, static_cast<std::uint64_t>(n),
                                     static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(p)});
              const EstimateReport report =
                  chunked_estimate(problems[static_cast<std::size_t>(p)], cfg);
              if (std::isfinite(report.log_integral)) {
                const double truth = truths[static_cast<std::size_t>(p)];
                ape[static_cast<std::size_t>(p)] =
                    100.0 * std::abs(truth - report.log_integral) / std::abs(truth);
              }
            }
          },
          /*grain=*/2);
      cell.seconds = elapsed_seconds(start);
      std::vector<double> ok;
      for (double v : ape) {
        if (v >= 0.0)
          ok.push_back(v);
        else
          ++cell.failures;
      }
      cell.report = summarize(Metric::MapeLogIntegral, ok);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

Experiment2Result run_experiment2(const std::vector<SyntheticProblemSpec>& problems,
                                  const std::vector<std::int64_t>& m_values, int runs,
                                  std::uint64_t seed, int threads) {
  if (problems.empty() || m_values.empty() || runs < 1)
    throw InvalidInputError("experiment 2 needs problems, sample counts, and runs");

  Experiment2Result result;
  for (std::size_t pi = 0; pi < problems.size(); ++pi) {
    const GeneratedProblem gen = generate_problem(problems[pi]);
    const Eigen::VectorXd train_x = gen.train.features.col(0);

    Eigen::VectorXd oracle_posterior(gen.test_features.rows());
    double oracle_log_marginal = 0.0;
    for (Eigen::Index j = 0; j < gen.test_features.rows(); ++j) {
      const auto o = oracles::linear_kernel_posterior_1d(train_x, gen.train.labels,
                                                         gen.test_features(j, 0));
      oracle_posterior[j] = o.posterior;
      oracle_log_marginal = o.log_denominator;
    }
    if (gen.test_features.rows() == 0)
      oracle_log_marginal =
          oracles::linear_kernel_posterior_1d(train_x, gen.train.labels, 0.0).log_denominator;

    for (std::int64_t m : m_values) {
      ExperimentCell mae_cell, mape_cell;
      mae_cell.label = mape_cell.label = "problem" + std::to_string(pi + 1);
      mae_cell.dimension = mape_cell.dimension = problems[pi].n_train;
      mae_cell.m_samples = mape_cell.m_samples = m;

      std::vector<double> mae(static_cast<std::size_t>(runs), -1.0);
      std::vector<double> mape(static_cast<std::size_t>(runs), -1.0);
      const auto start = std::chrono::steady_clock::now();
      parallel_for(
          runs, threads,
          [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t r = lo; r < hi; ++r) {
              EstimatorConfig cfg;
              cfg.samples_per_dim = m;
              cfg.seed = derive_key(seed, StreamTag::SeedDerive,
                                    {kExp2Tag, static_cast<std::uint64_t>(pi),
                                     static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(r)});
              try {
                const GpcModel model =
                    fit(gen.train, KernelSpec::linear(), cfg, OrderingMode::Interleave);
                const CovarianceBundle bundle = prediction_bundle(model, gen.test_features);
                double abs_sum = 0.0;
                for (Eigen::Index j = 0; j < gen.test_features.rows(); ++j) {
                  const Prediction pred = predict(model, bundle, j);
                  abs_sum += std::abs(pred.posterior - oracle_posterior[j]);
                }
                if (gen.test_features.rows() > 0)
                  mae[static_cast<std::size_t>(r)] =
                      abs_sum / static_cast<double>(gen.test_features.rows());
                mape[static_cast<std::size_t>(r)] =
                    100.0 * std::abs(oracle_log_marginal - model.log_marginal) /
                    std::abs(oracle_log_marginal);
              } catch (const FitError&) {
                // dropped run; counted below
              }
            }
          },
          /*grain=*/2);
      const double secs = elapsed_seconds(start);
      mae_cell.seconds = mape_cell.seconds = secs;

      std::vector<double> mae_ok, mape_ok;
      for (double v : mae) {
        if (v >= 0.0)
          mae_ok.push_back(v);
        else
          ++mae_cell.failures;
      }
      for (double v : mape) {
        if (v >= 0.0)
          mape_ok.push_back(v);
        else
          ++mape_cell.failures;
      }
      mae_cell.report = summarize(Metric::MaePosterior, mae_ok);
      mape_cell.report = summarize(Metric::MapeLogMarginal, mape_ok);
      result.mae_posterior.push_back(std::move(mae_cell));
      result.mape_log_marginal.push_back(std::move(mape_cell));
    }
  }
  return result;
}

std::vector<SyntheticProblemSpec> standard_problems(std::uint64_t seed) {
  std::vector<SyntheticProblemSpec> problems = {
      {100, 50, 0.0, 1.0, 0.2, 0.3, 0},
      {200, 100, 0.0, 1.0, 2.0, 1.0, 0},
      {400, 200, 0.0, 1.5, 0.5, 0.75, 0},
      {800, 400, 0.0, 1.0, 1.0, 0.75, 0},
  };
  for (std::size_t i = 0; i < problems.size(); ++i)
    problems[i].seed = derive_key(seed, StreamTag::DatasetGen, {static_cast<std::uint64_t>(i)});
  return problems;
}

void write_cells_csv(std::ostream& out, const std::vector<ExperimentCell>& cells) {
  out << "label,dimension,m_samples,metric,value,std_error,runs,seconds\n";
  for (const ExperimentCell& cell : cells) {
    out << cell.label << ',' << cell.dimension << ',' << cell.m_samples << ','
        << metric_name(cell.report.metric) << ',' << format_sci(cell.report.value) << ','
        << format_sci(cell.report.std_error) << ',' << cell.report.runs << ','
        << format_sci(cell.seconds) << '\n';
  }
}

}  // namespace gpcmc::experiments
