#include "gpcmc/gpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "gpcmc/parallel.hpp"

namespace gpcmc {

namespace {

Dataset apply_permutation(const Dataset& data, const std::vector<int>& perm) {
  Dataset out;
  out.features.resize(data.features.rows(), data.features.cols());
  out.labels.resize(data.labels.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.features.row(static_cast<Eigen::Index>(k)) = data.features.row(perm[k]);
    out.labels[static_cast<Eigen::Index>(k)] = data.labels[perm[k]];
  }
  return out;
}

}  // namespace

std::uint64_t ordering_fingerprint(const LabelSigns& ordering, const KernelSpec& spec) {
  std::uint64_t h = derive_key(0x9c0f2a5bULL, {static_cast<std::uint64_t>(spec.family),
                                               std::bit_cast<std::uint64_t>(spec.alpha),
                                               std::bit_cast<std::uint64_t>(spec.beta)});
  for (int p : ordering.permutation) h = mix64(h ^ mix64(static_cast<std::uint64_t>(p) + kGolden));
  return h;
}

std::pair<Dataset, LabelSigns> reorder(const Dataset& train, OrderingMode mode,
                                       std::uint64_t seed) {
  validate(train);
  const Eigen::Index n = train.labels.size();
  std::vector<int> perm;
  perm.reserve(static_cast<std::size_t>(n));

  switch (mode) {
    case OrderingMode::AsGiven: {
      for (Eigen::Index i = 0; i < n; ++i) perm.push_back(static_cast<int>(i));
      break;
    }
    case OrderingMode::Interleave: {
      std::vector<int> class1, class2;
      for (Eigen::Index i = 0; i < n; ++i)
        (train.labels[i] > 0 ? class1 : class2).push_back(static_cast<int>(i));
      const std::size_t longest = std::max(class1.size(), class2.size());
      for (std::size_t k = 0; k < longest; ++k) {
        if (k < class1.size()) perm.push_back(class1[k]);
        if (k < class2.size()) perm.push_back(class2[k]);
      }
      break;
    }
    case OrderingMode::SeededShuffle: {
      for (Eigen::Index i = 0; i < n; ++i) perm.push_back(static_cast<int>(i));
      const RngStream stream(derive_key(seed, StreamTag::Shuffle));
      std::uint64_t counter = 0;
      for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(
            stream.index(counter++, static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
      break;
    }
  }

  Dataset ordered = apply_permutation(train, perm);
  LabelSigns signs{ordered.labels, std::move(perm)};
  return {std::move(ordered), std::move(signs)};
}

GpcModel fit(const Dataset& train, const KernelSpec& spec, const EstimatorConfig& cfg,
             OrderingMode ordering) {
  validate(spec);
  validate(cfg);
  if (cfg.replicates != 1)
    throw InvalidInputError("fit runs a single pass; set replicates = 1");
  if (cfg.resolved_chunk() != cfg.samples_per_dim)
    throw InvalidInputError("fit holds all M sample strings; chunking is not available");

  GpcModel model;
  model.kernel = spec;
  model.config = cfg;
  std::tie(model.ordered_train, model.ordering) = reorder(train, ordering, cfg.seed);
  model.fingerprint = ordering_fingerprint(model.ordering, spec);

  const Eigen::Index n = model.ordered_train.labels.size();
  const Eigen::MatrixXd sigma = covariance_matrix(spec, model.ordered_train.features);
  OrthantProblem problem;
  problem.covariance = model.ordered_train.labels.asDiagonal() *
                       (Eigen::MatrixXd::Identity(n, n) + sigma) *
                       model.ordered_train.labels.asDiagonal();
  problem.region.assign(static_cast<std::size_t>(n), Region::HalfLinePositive);

  OrthantPassResult pass =
      run_orthant_pass(problem, cfg.samples_per_dim, cfg.seed, 0, cfg.threads);
  if (pass.report.failed_dim) {
    const int dim = *pass.report.failed_dim + 1;
    throw FitError("all samples rejected at training dimension " + std::to_string(dim) +
                       "; increase samples_per_dim",
                   dim);
  }

  model.r_train = std::move(problem.covariance);
  model.q_final = std::move(pass.q_final);
  model.particles = std::move(pass.particles);
  model.per_dim_p = pass.report.per_dim_accept;
  model.log_marginal = pass.report.log_integral;
  model.fit_report = std::move(pass.report);
  return model;
}

CovarianceBundle prediction_bundle(const GpcModel& model,
                                   const Eigen::Ref<const Eigen::MatrixXd>& test_features) {
  CovarianceBundle bundle = build_covariance(model.kernel, model.ordered_train, test_features);
  bundle.fingerprint = model.fingerprint;
  return bundle;
}

Prediction predict(const GpcModel& model, const CovarianceBundle& bundle,
                   Eigen::Index test_index) {
  const Eigen::Index n = model.ordered_train.labels.size();
  if (model.particles.current_dim != n) throw ContractError("model is not fitted");
  if (bundle.fingerprint != model.fingerprint)
    throw ContractError("covariance bundle was not built against this model's ordering");
  if (test_index < 0 || test_index >= bundle.test_count())
    throw InvalidInputError("test index out of range");

  const Eigen::VectorXd r =
      (model.ordered_train.labels.array() * bundle.cross.col(test_index).array()).matrix();
  const Eigen::VectorXd b = model.q_final * r;
  const double diag = 1.0 + bundle.test_diag[test_index];
  const double cond_var = diag - r.dot(b);
  if (!(cond_var > kCondVarFloor * diag))
    throw DegenerateCovarianceError("test conditional variance collapsed",
                                    static_cast<int>(n) + 1);
  const double sd = std::sqrt(cond_var);

  const Eigen::VectorXd mean = model.particles.values.leftCols(n) * b;
  const RngStream stream(derive_key(model.config.seed, StreamTag::TestPattern,
                                    {static_cast<std::uint64_t>(test_index)}));
  const std::int64_t m_total = model.particles.rows();
  std::int64_t accepted = 0;
  for (std::int64_t m = 0; m < m_total; ++m)
    accepted += (mean[m] + sd * stream.normal(static_cast<std::uint64_t>(m))) >= 0.0 ? 1 : 0;

  Prediction out;
  out.posterior = static_cast<double>(accepted) / static_cast<double>(m_total);
  out.predicted_class = out.posterior >= 0.5 ? 1 : -1;
  out.test_cond_var = cond_var;
  return out;
}

std::vector<TuneEntry> tune(const Dataset& train, const std::vector<KernelSpec>& grid,
                            const EstimatorConfig& cfg_small, OrderingMode ordering) {
  if (grid.empty()) throw InvalidInputError("hyperparameter grid is empty");
  validate(train);
  validate(cfg_small);

  std::vector<TuneEntry> entries;
  entries.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TuneEntry entry{grid[g], -std::numeric_limits<double>::infinity(), false, "",
                    static_cast<int>(g)};
    EstimatorConfig cell = cfg_small;
    cell.seed = derive_key(cfg_small.seed, StreamTag::SeedDerive, {static_cast<std::uint64_t>(g)});
    try {
      const GpcModel model = fit(train, grid[g], cell, ordering);
      entry.log_marginal = model.log_marginal;
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.message = e.what();
    }
    entries.push_back(std::move(entry));
  }

  if (std::none_of(entries.begin(), entries.end(), [](const TuneEntry& e) { return e.ok; }))
    throw TunerError("every hyperparameter combination failed to fit");

  std::stable_sort(entries.begin(), entries.end(), [](const TuneEntry& a, const TuneEntry& b) {
    if (a.ok != b.ok) return a.ok;
    if (a.ok && a.log_marginal != b.log_marginal) return a.log_marginal > b.log_marginal;
    return a.grid_index < b.grid_index;
  });
  return entries;
}

}  // namespace gpcmc
