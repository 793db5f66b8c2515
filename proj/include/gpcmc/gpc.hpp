#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpcmc/kernels.hpp"
#include "gpcmc/orthant_mc.hpp"

// Gaussian process classification through the orthant estimator. Fitting runs
// one sequential pass over the training dimensions of C'(I+Sigma)C', which
// yields the log marginal likelihood as the pass's log orthant integral plus
// the surviving particles; each test pattern is then a single extra
// conditional dimension whose acceptance fraction is the class-1 posterior.

namespace gpcmc {

enum class OrderingMode { Interleave, SeededShuffle, AsGiven };

/// Reordered training labels (the diagonal of C') plus the permutation that
/// produced them: ordered pattern k is original pattern permutation[k].
struct LabelSigns {
  Eigen::VectorXd signs;
  std::vector<int> permutation;
};

/// Applies the ordering mode to the training set. Interleave alternates
/// class-1 and class-2 patterns round-robin (leftovers of the longer class
/// trail at the end); SeededShuffle applies a seeded uniform permutation;
/// AsGiven is the identity. Pattern ordering strongly affects how close the
/// per-dimension acceptance ratios sit to 1/2, and with them the accuracy.
std::pair<Dataset, LabelSigns> reorder(const Dataset& train, OrderingMode mode,
                                       std::uint64_t seed = 0);

struct GpcModel {
  KernelSpec kernel;
  LabelSigns ordering;
  Dataset ordered_train;
  Eigen::MatrixXd r_train;     // C'(I+Sigma)C'
  Eigen::MatrixXd q_final;     // inverse of r_train, built by the recursion
  ParticleEnsemble particles;  // M x N surviving (nonnegative) sample strings
  Eigen::VectorXd per_dim_p;
  double log_marginal = 0.0;
  EstimateReport fit_report;
  EstimatorConfig config;
  std::uint64_t fingerprint = 0;  // hash of permutation + kernel spec
};

/// Algorithm: reorder, build R = C'(I+Sigma)C', sweep the N training
/// dimensions once. The model is immutable afterwards; q_final is frozen and
/// never updated by predictions. fit needs every sample string in memory, so
/// cfg must describe a single unchunked pass (replicates == 1, chunk_size 0
/// or M). Throws FitError when a dimension loses every sample; the remedy is
/// a larger M.
GpcModel fit(const Dataset& train, const KernelSpec& spec, const EstimatorConfig& cfg,
             OrderingMode ordering = OrderingMode::Interleave);

/// Covariance blocks between the model's ordered training set and the given
/// test patterns, stamped with the model's ordering fingerprint.
CovarianceBundle prediction_bundle(const GpcModel& model,
                                   const Eigen::Ref<const Eigen::MatrixXd>& test_features);

struct Prediction {
  double posterior;     // class-1 posterior estimate, a rational with denominator M
  int predicted_class;  // +1 when posterior >= 0.5, else -1
  double test_cond_var;
};

/// One O(N^2) solve plus M conditional draws against the stored training
/// particles; no bootstrap step and no model update. Draws come from a stream
/// keyed by the test index, so predictions are independent of each other and
/// of the order they are requested in. Throws ContractError when the bundle
/// was not built against this model's ordering.
Prediction predict(const GpcModel& model, const CovarianceBundle& bundle,
                   Eigen::Index test_index);

struct TuneEntry {
  KernelSpec spec;
  double log_marginal;  // -inf when the fit failed
  bool ok;
  std::string message;  // failure reason when !ok
  int grid_index;
};

/// Grid search over kernel specs ranked by log marginal likelihood
/// (descending, ties broken by grid order, failures last). Each cell fits
/// with cfg_small under its own derived seed. Throws TunerError when every
/// cell fails.
std::vector<TuneEntry> tune(const Dataset& train, const std::vector<KernelSpec>& grid,
                            const EstimatorConfig& cfg_small,
                            OrderingMode ordering = OrderingMode::Interleave);

/// Fingerprint used to pair prediction bundles with fitted models.
std::uint64_t ordering_fingerprint(const LabelSigns& ordering, const KernelSpec& spec);

}  // namespace gpcmc
