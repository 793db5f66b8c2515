// Command-line front end: orthant estimation, classifier training and
// prediction, hyperparameter tuning, and benchmark reproduction.
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gpcmc/csv_io.hpp"
#include "gpcmc/experiments.hpp"
#include "gpcmc/gpc.hpp"
#include "gpcmc/oracles.hpp"
#include "gpcmc/orthant_mc.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

using gpcmc::Region;

std::vector<Region> parse_region(const std::string& spec, Eigen::Index n) {
  if (spec.empty()) return std::vector<Region>(static_cast<std::size_t>(n), Region::HalfLinePositive);
  if (static_cast<Eigen::Index>(spec.size()) != n)
    throw gpcmc::InvalidInputError("region spec must have one character per dimension");
  std::vector<Region> region;
  for (char c : spec) {
    switch (c) {
      case '+':
      case 'p':
      case 'P':
        region.push_back(Region::HalfLinePositive);
        break;
      case 'f':
      case 'F':
      case '*':
        region.push_back(Region::FullLine);
        break;
      default:
        throw gpcmc::InvalidInputError(std::string("unknown region character '") + c +
                                       "' (use '+' or 'f')");
    }
  }
  return region;
}

// Recovers d with R_ij = d_i d_j (unit diagonal) if the matrix has that
// structure; empty otherwise.
std::optional<Eigen::VectorXd> recover_rank_one(const Eigen::MatrixXd& r) {
  const Eigen::Index n = r.rows();
  if (((r.diagonal().array() - 1.0).abs() > 1e-9).any()) return std::nullopt;
  Eigen::MatrixXd off = r;
  off.diagonal().setZero();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  Eigen::Index i0 = 0;
  off.array().abs().rowwise().sum().maxCoeff(&i0);
  if (off.row(i0).array().abs().maxCoeff() > 1e-12) {
    Eigen::Index j0 = 0;
    off.row(i0).array().abs().maxCoeff(&j0);
    Eigen::Index k0 = -1;
    double best = 1e-12;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i0 || k == j0) continue;
      if (std::abs(off(j0, k)) > best) {
        best = std::abs(off(j0, k));
        k0 = k;
      }
    }
    double di0_sq;
    if (k0 >= 0)
      di0_sq = off(i0, j0) * off(i0, k0) / off(j0, k0);
    else
      di0_sq = std::abs(off(i0, j0));  // only one coupled pair: split evenly
    if (!(di0_sq > 0.0) || di0_sq >= 1.0) return std::nullopt;
    d[i0] = std::sqrt(di0_sq);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i0) d[j] = off(i0, j) / d[i0];
  }
  if ((d.array().abs() >= 1.0).any()) return std::nullopt;
  Eigen::MatrixXd check = d * d.transpose();
  check.diagonal().setOnes();
  if ((check - r).array().abs().maxCoeff() > 1e-8) return std::nullopt;
  return d;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw gpcmc::InvalidInputError("cannot write '" + path + "'");
  return out;
}

int cmd_orthant(const std::string& covariance_path, const std::string& region_spec,
                const gpcmc::EstimatorConfig& cfg, const std::string& csv_path,
                bool with_oracle, std::int64_t oracle_samples) {
  gpcmc::OrthantProblem problem;
  problem.covariance = gpcmc::csv::read_matrix(covariance_path);
  problem.region = parse_region(region_spec, problem.covariance.rows());
  gpcmc::validate(problem);

  const gpcmc::EstimateReport report = gpcmc::chunked_estimate(problem, cfg);

  const Eigen::Index n = problem.dim();
  std::cout << "dimensions: " << n << "  samples per pass: "
            << cfg.samples_per_dim / ((cfg.samples_per_dim + cfg.resolved_chunk() - 1) /
                                      cfg.resolved_chunk())
            << "  passes: " << report.passes << "\n";
  if (n <= 16) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool constrained =
          problem.region[static_cast<std::size_t>(i)] == Region::HalfLinePositive;
      std::cout << "  dim " << i << (constrained ? "  P = " : "  free, P = ")
                << report.per_dim_accept[i] << "  accepted " << report.accepted_counts[i]
                << "\n";
    }
  } else {
    Eigen::Index lo = 0, hi = 0;
    report.per_dim_accept.minCoeff(&lo);
    report.per_dim_accept.maxCoeff(&hi);
    std::cout << "  acceptance ratios: min " << report.per_dim_accept[lo] << " (dim " << lo
              << ")  max " << report.per_dim_accept[hi] << " (dim " << hi << ")  mean "
              << report.per_dim_accept.mean() << "\n";
  }
  std::cout << "plug-in bias: " << report.bias_estimate
            << "  plug-in variance: " << report.variance_estimate << "\n";
  if (report.replicate_std_error)
    std::cout << "replicate std error: " << *report.replicate_std_error << "\n";
  if (report.failed_passes > 0)
    std::cout << "failed passes: " << report.failed_passes << " of " << report.passes << "\n";
  std::cout << "log integral: " << gpcmc::csv::format_full(report.log_integral) << "\n";

  std::optional<double> oracle_log;
  std::string oracle_kind;
  if (with_oracle) {
    if (const auto d = recover_rank_one(problem.covariance);
        d && std::all_of(problem.region.begin(), problem.region.end(),
                         [](Region r) { return r == Region::HalfLinePositive; })) {
      oracle_log = gpcmc::oracles::orthant_rank_one({*d});
      oracle_kind = "rank-one reduction";
    } else if (n <= 6) {
      const auto bf = gpcmc::oracles::brute_force_orthant(
          problem.covariance,
          std::vector<gpcmc::Region>(problem.region.begin(), problem.region.end()), cfg.seed,
          oracle_samples);
      oracle_log = std::log(bf.probability);
      oracle_kind = "brute force";
    } else {
      throw gpcmc::InvalidInputError(
          "--oracle needs a rank-one-structured covariance or dimension <= 6");
    }
    std::cout << "oracle (" << oracle_kind
              << ") log integral: " << gpcmc::csv::format_full(*oracle_log)
              << "  |diff|: " << std::abs(*oracle_log - report.log_integral) << "\n";
  }

  if (!csv_path.empty()) {
    auto out = open_output(csv_path);
    out << "log_integral,dims,samples_per_dim,passes,failed_passes,bias_estimate,"
           "variance_estimate,replicate_std_error";
    if (oracle_log) out << ",oracle_log_integral,abs_error";
    out << "\n";
    out << gpcmc::csv::format_full(report.log_integral) << ',' << n << ','
        << cfg.samples_per_dim << ',' << report.passes << ',' << report.failed_passes << ','
        << gpcmc::csv::format_full(report.bias_estimate) << ','
        << gpcmc::csv::format_full(report.variance_estimate) << ','
        << (report.replicate_std_error ? gpcmc::csv::format_full(*report.replicate_std_error)
                                       : std::string());
    if (oracle_log)
      out << ',' << gpcmc::csv::format_full(*oracle_log) << ','
          << gpcmc::csv::format_full(std::abs(*oracle_log - report.log_integral));
    out << "\n";
  }

  if (!std::isfinite(report.log_integral)) {
    std::cout << "estimation failed"
              << (report.failed_dim
                      ? ": every sample rejected at dimension " + std::to_string(*report.failed_dim)
                      : std::string())
              << "; increase --samples\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_make_rankone(int dim, std::uint64_t seed, const std::string& out_path,
                     const std::string& d_path) {
  if (dim < 1) throw gpcmc::InvalidInputError("--dim must be >= 1");
  const gpcmc::RngStream stream(gpcmc::derive_key(seed, gpcmc::StreamTag::ProblemGen));
  Eigen::VectorXd d(dim);
  for (int i = 0; i < dim; ++i) d[i] = 2.0 * stream.uniform(static_cast<std::uint64_t>(i)) - 1.0;
  Eigen::MatrixXd r = d * d.transpose();
  r.diagonal().setOnes();
  gpcmc::csv::write_matrix(out_path, r);
  if (!d_path.empty()) gpcmc::csv::write_matrix(d_path, d);
  std::cout << "wrote " << dim << "x" << dim << " rank-one-structured covariance to " << out_path
            << "\n";
  return 0;
}

int cmd_fit_predict(const std::string& train_path, const std::string& test_path,
                    const gpcmc::KernelSpec& spec, const gpcmc::EstimatorConfig& cfg,
                    gpcmc::OrderingMode ordering, const std::string& out_path, bool with_oracle) {
  const gpcmc::Dataset train = gpcmc::csv::read_training(train_path);
  Eigen::MatrixXd test(0, train.features.cols());
  if (!test_path.empty()) test = gpcmc::csv::read_features(test_path, train.features.cols());

  if (with_oracle && (spec.family != gpcmc::KernelFamily::Linear || train.features.cols() != 1))
    throw gpcmc::InvalidInputError("--oracle requires the linear kernel and a single feature");

  const gpcmc::GpcModel model = gpcmc::fit(train, spec, cfg, ordering);
  std::cout << "log marginal likelihood: " << gpcmc::csv::format_full(model.log_marginal)
            << "\n";

  std::vector<gpcmc::Prediction> predictions;
  if (test.rows() > 0) {
    const gpcmc::CovarianceBundle bundle = gpcmc::prediction_bundle(model, test);
    predictions.reserve(static_cast<std::size_t>(test.rows()));
    for (Eigen::Index j = 0; j < test.rows(); ++j)
      predictions.push_back(gpcmc::predict(model, bundle, j));
  }

  std::vector<double> oracle_posteriors;
  if (with_oracle) {
    const Eigen::VectorXd x = train.features.col(0);
    double mae = 0.0;
    double oracle_log_marginal = 0.0;
    for (Eigen::Index j = 0; j < test.rows(); ++j) {
      const auto o = gpcmc::oracles::linear_kernel_posterior_1d(x, train.labels, test(j, 0));
      oracle_posteriors.push_back(o.posterior);
      oracle_log_marginal = o.log_denominator;
      mae += std::abs(o.posterior - predictions[static_cast<std::size_t>(j)].posterior);
    }
    if (test.rows() == 0)
      oracle_log_marginal =
          gpcmc::oracles::linear_kernel_posterior_1d(x, train.labels, 0.0).log_denominator;
    std::cout << "oracle log marginal likelihood: "
              << gpcmc::csv::format_full(oracle_log_marginal) << "  APE: "
              << 100.0 * std::abs(oracle_log_marginal - model.log_marginal) /
                     std::abs(oracle_log_marginal)
              << "%\n";
    if (test.rows() > 0)
      std::cout << "posterior MAE vs oracle: " << mae / static_cast<double>(test.rows()) << "\n";
  }

  auto out = open_output(out_path);
  out << "index,posterior,predicted_class";
  if (with_oracle) out << ",oracle_posterior,abs_error";
  out << "\n";
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    out << j << ',' << gpcmc::csv::format_full(predictions[j].posterior) << ','
        << predictions[j].predicted_class;
    if (with_oracle)
      out << ',' << gpcmc::csv::format_full(oracle_posteriors[j]) << ','
          << gpcmc::csv::format_full(std::abs(oracle_posteriors[j] - predictions[j].posterior));
    out << "\n";
  }
  std::cout << "wrote " << predictions.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_tune(const std::string& train_path, const gpcmc::KernelFamily family,
             const std::vector<double>& alphas, const std::vector<double>& betas,
             const gpcmc::EstimatorConfig& cfg, gpcmc::OrderingMode ordering,
             const std::string& out_path) {
  const gpcmc::Dataset train = gpcmc::csv::read_training(train_path);
  std::vector<gpcmc::KernelSpec> grid;
  if (family == gpcmc::KernelFamily::Linear) {
    grid.push_back(gpcmc::KernelSpec::linear());
  } else {
    if (alphas.empty() || betas.empty())
      throw gpcmc::InvalidInputError("RBF tuning needs --alphas and --betas");
    for (double a : alphas)
      for (double b : betas) grid.push_back(gpcmc::KernelSpec::rbf(a, b));
  }

  const auto ranked = gpcmc::tune(train, grid, cfg, ordering);
  for (const auto& entry : ranked)
    if (!entry.ok)
      std::cerr << "cell " << entry.grid_index << " (alpha=" << entry.spec.alpha
                << ", beta=" << entry.spec.beta << ") failed: " << entry.message << "\n";

  auto out = open_output(out_path);
  out << "rank,family,alpha,beta,log_marginal,status\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& entry = ranked[r];
    out << (r + 1) << ','
        << (entry.spec.family == gpcmc::KernelFamily::RBF ? "rbf" : "linear") << ','
        << gpcmc::csv::format_full(entry.spec.alpha) << ','
        << gpcmc::csv::format_full(entry.spec.beta) << ','
        << gpcmc::csv::format_full(entry.log_marginal) << ',' << (entry.ok ? "ok" : "failed")
        << "\n";
  }
  std::cout << "best: alpha=" << ranked.front().spec.alpha << " beta=" << ranked.front().spec.beta
            << " log L=" << gpcmc::csv::format_full(ranked.front().log_marginal) << "\n";
  std::cout << "wrote " << ranked.size() << " ranked cells to " << out_path << "\n";
  return 0;
}

int cmd_experiment(const std::string& name, bool desk_scale, std::uint64_t seed, int threads,
                   const std::string& out_dir, int problems_override, int runs_override,
                   const std::vector<std::int64_t>& m_override) {
  namespace exps = gpcmc::experiments;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw gpcmc::InvalidInputError("cannot create output directory '" + out_dir + "'");

  if (name == "exp1") {
    const std::vector<int> dims = desk_scale ? std::vector<int>{50} : std::vector<int>{50, 200, 500};
    std::vector<std::int64_t> m_values =
        desk_scale ? std::vector<std::int64_t>{10'000, 100'000}
                   : std::vector<std::int64_t>{10'000, 30'000, 100'000, 300'000, 1'000'000,
                                               3'000'000};
    int problems = 50;
    if (!m_override.empty()) m_values = m_override;
    if (problems_override > 0) problems = problems_override;
    const auto cells = exps::run_experiment1(dims, m_values, problems, seed, threads);
    const std::string path = out_dir + "/exp1.csv";
    auto out = open_output(path);
    exps::write_cells_csv(out, cells);
    std::cout << "wrote " << cells.size() << " cells to " << path << "\n";
    return 0;
  }
  if (name == "exp2") {
    auto problems = exps::standard_problems(seed);
    std::vector<std::int64_t> m_values = {10'000,  30'000,    100'000,
                                          300'000, 1'000'000, 3'000'000};
    int runs = 20;
    if (desk_scale) {
      problems.resize(1);
      m_values = {30'000, 100'000};
      runs = 5;
    }
    if (!m_override.empty()) m_values = m_override;
    if (runs_override > 0) runs = runs_override;
    if (problems_override > 0 && problems_override < static_cast<int>(problems.size()))
      problems.resize(static_cast<std::size_t>(problems_override));
    const auto result = exps::run_experiment2(problems, m_values, runs, seed, threads);
    const std::string mae_path = out_dir + "/exp2_mae.csv";
    const std::string mape_path = out_dir + "/exp2_mape.csv";
    {
      auto out = open_output(mae_path);
      exps::write_cells_csv(out, result.mae_posterior);
    }
    {
      auto out = open_output(mape_path);
      exps::write_cells_csv(out, result.mape_log_marginal);
    }
    std::cout << "wrote " << result.mae_posterior.size() << " cells to " << mae_path << " and "
              << mape_path << "\n";
    return 0;
  }
  throw gpcmc::InvalidInputError("unknown experiment '" + name + "' (use exp1 or exp2)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process classification by sequential Monte Carlo orthant integration"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed/--threads may follow the subcommand

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "base seed; every random stream derives from it");
  app.add_option("--threads", threads, "worker cap (0 = all cores); results do not depend on it");

  // orthant
  auto* orthant = app.add_subcommand("orthant", "estimate a log orthant probability");
  std::string cov_path, region_spec, orthant_csv;
  std::int64_t samples = 1'000'000, chunk_size = 1'000'000, oracle_samples = 10'000'000;
  int replicates = 1;
  bool with_oracle = false;
  orthant->add_option("--covariance", cov_path, "CSV file with the covariance matrix")
      ->required();
  orthant->add_option("--region", region_spec,
                      "one char per dim: '+' = v >= 0, 'f' = unconstrained (default all '+')");
  orthant->add_option("--samples,-M", samples, "Monte Carlo points per dimension");
  orthant->add_option("--replicates", replicates, "independent passes to average");
  orthant->add_option("--chunk-size", chunk_size, "max points held in memory per pass");
  orthant->add_option("--csv", orthant_csv, "write a one-row machine-readable summary here");
  orthant->add_flag("--oracle", with_oracle,
                    "cross-check against the rank-one reduction or brute force");
  orthant->add_option("--oracle-samples", oracle_samples, "brute-force sample count");

  // make-rankone
  auto* make_rankone =
      app.add_subcommand("make-rankone", "generate a rank-one-structured covariance file");
  int rankone_dim = 50;
  std::string rankone_out, rankone_d_out;
  make_rankone->add_option("--dim", rankone_dim, "dimension")->required();
  make_rankone->add_option("--out", rankone_out, "covariance CSV path")->required();
  make_rankone->add_option("--d-out", rankone_d_out, "also write the generating d vector");

  // fit-predict
  auto* fit_predict = app.add_subcommand("fit-predict", "train a classifier and score test data");
  std::string train_path, test_path, pred_out = "predictions.csv", kernel_name = "rbf",
              ordering_name = "interleave";
  double alpha = 1.0, beta = 1.0;
  std::int64_t fit_samples = 100'000;
  bool fit_oracle = false;
  fit_predict->add_option("--train", train_path, "training CSV (features..., label)")->required();
  fit_predict->add_option("--test", test_path, "test CSV (features only); may be empty");
  fit_predict->add_option("--kernel", kernel_name, "rbf | linear");
  fit_predict->add_option("--alpha", alpha, "RBF length scale");
  fit_predict->add_option("--beta", beta, "RBF latent function scale");
  fit_predict->add_option("--samples,-M", fit_samples, "Monte Carlo points per dimension");
  fit_predict->add_option("--ordering", ordering_name, "interleave | shuffle | asgiven");
  fit_predict->add_option("--out", pred_out, "predictions CSV path");
  fit_predict->add_flag("--oracle", fit_oracle,
                        "compare against the exact 1-D reduction (linear kernel, one feature)");

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "rank hyperparameters by marginal likelihood");
  std::string tune_train, tune_out = "tuned.csv", tune_kernel = "rbf",
              tune_ordering = "interleave";
  std::vector<double> alphas, betas;
  std::int64_t tune_samples = 30'000;
  tune_cmd->add_option("--train", tune_train, "training CSV")->required();
  tune_cmd->add_option("--kernel", tune_kernel, "rbf | linear");
  tune_cmd->add_option("--alphas", alphas, "candidate length scales")->delimiter(',');
  tune_cmd->add_option("--betas", betas, "candidate latent scales")->delimiter(',');
  tune_cmd->add_option("--samples,-M", tune_samples, "Monte Carlo points per cell");
  tune_cmd->add_option("--ordering", tune_ordering, "interleave | shuffle | asgiven");
  tune_cmd->add_option("--out", tune_out, "ranked CSV path");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "reproduce a benchmark table");
  std::string exp_name, exp_out_dir = ".";
  bool desk_scale = false;
  int exp_problems = 0, exp_runs = 0;
  std::vector<std::int64_t> exp_m;
  experiment->add_option("--name", exp_name, "exp1 | exp2")->required();
  experiment->add_flag("--desk-scale", desk_scale, "shrunk preset for quick runs");
  experiment->add_option("--out-dir", exp_out_dir, "output directory for the CSV tables");
  experiment->add_option("--problems", exp_problems, "override the problem count");
  experiment->add_option("--runs", exp_runs, "override the runs per cell (exp2)");
  experiment->add_option("--m", exp_m, "override the sample-count list")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion") return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  const auto parse_ordering = [](const std::string& name) {
    if (name == "interleave") return gpcmc::OrderingMode::Interleave;
    if (name == "shuffle") return gpcmc::OrderingMode::SeededShuffle;
    if (name == "asgiven") return gpcmc::OrderingMode::AsGiven;
    throw gpcmc::InvalidInputError("unknown ordering '" + name + "'");
  };
  const auto parse_kernel = [&](const std::string& name) {
    if (name == "rbf") return gpcmc::KernelSpec::rbf(alpha, beta);
    if (name == "linear") return gpcmc::KernelSpec::linear();
    throw gpcmc::InvalidInputError("unknown kernel '" + name + "'");
  };

  try {
    if (orthant->parsed()) {
      gpcmc::EstimatorConfig cfg;
      cfg.samples_per_dim = samples;
      cfg.seed = seed;
      cfg.chunk_size = std::min(chunk_size, samples);
      cfg.replicates = replicates;
      cfg.threads = threads;
      return cmd_orthant(cov_path, region_spec, cfg, orthant_csv, with_oracle, oracle_samples);
    }
    if (make_rankone->parsed())
      return cmd_make_rankone(rankone_dim, seed, rankone_out, rankone_d_out);
    if (fit_predict->parsed()) {
      gpcmc::EstimatorConfig cfg;
      cfg.samples_per_dim = fit_samples;
      cfg.seed = seed;
      cfg.threads = threads;
      return cmd_fit_predict(train_path, test_path, parse_kernel(kernel_name), cfg,
                             parse_ordering(ordering_name), pred_out, fit_oracle);
    }
    if (tune_cmd->parsed()) {
      gpcmc::EstimatorConfig cfg;
      cfg.samples_per_dim = tune_samples;
      cfg.seed = seed;
      cfg.threads = threads;
      const auto family = tune_kernel == "linear" ? gpcmc::KernelFamily::Linear
                                                  : gpcmc::KernelFamily::RBF;
      if (tune_kernel != "linear" && tune_kernel != "rbf")
        throw gpcmc::InvalidInputError("unknown kernel '" + tune_kernel + "'");
      return cmd_tune(tune_train, family, alphas, betas, cfg, parse_ordering(tune_ordering),
                      tune_out);
    }
    if (experiment->parsed())
      return cmd_experiment(exp_name, desk_scale, seed, threads, exp_out_dir, exp_problems,
                            exp_runs, exp_m);
  } catch (const gpcmc::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
