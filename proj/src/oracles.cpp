#include "gpcmc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gpcmc/normal.hpp"
#include "gpcmc/rng.hpp"

namespace gpcmc::oracles {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Grid {
  Eigen::VectorXd nodes;
  Eigen::VectorXd log_weights;
};

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on the
// three-term recurrence, then mapped to [lo, hi].
void gauss_legendre(int n, double lo, double hi, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(n);
  w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double scale = 0.5 * (hi - lo);
    x[i] = 0.5 * (lo + hi) - scale * z;
    x[n - 1 - i] = 0.5 * (lo + hi) + scale * z;
    w[i] = 2.0 * scale / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

Grid make_grid(const QuadratureConfig& quad) {
  validate(quad);
  Grid g;
  if (quad.rule == QuadratureRule::Trapezoid) {
    const double h = 2.0 * quad.half_width / (quad.nodes - 1);
    g.nodes = Eigen::VectorXd::LinSpaced(quad.nodes, -quad.half_width, quad.half_width);
    g.log_weights = Eigen::VectorXd::Constant(quad.nodes, std::log(h));
    g.log_weights[0] += std::log(0.5);
    g.log_weights[quad.nodes - 1] += std::log(0.5);
  } else {
    Eigen::VectorXd w;
    gauss_legendre(quad.nodes, -quad.half_width, quad.half_width, g.nodes, w);
    g.log_weights = w.array().log();
  }
  return g;
}

double log_sum_exp(const Eigen::VectorXd& g) {
  const double m = g.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) s += std::exp(g[k] - m);
  return m + std::log(s);
}

// log of Int exp(-u^2/2) Prod_i Phi(c_i u) * extra(u) du - log sqrt(2*pi),
// where extra adds any further log factors at a node.
template <typename ExtraLog>
double log_probit_product_integral(const Eigen::VectorXd& c, const Grid& grid, ExtraLog&& extra) {
  Eigen::VectorXd g(grid.nodes.size());
  for (Eigen::Index k = 0; k < grid.nodes.size(); ++k) {
    const double u = grid.nodes[k];
    double acc = -0.5 * u * u + grid.log_weights[k] + extra(u);
    for (Eigen::Index i = 0; i < c.size(); ++i) acc += log_normal_cdf(c[i] * u);
    g[k] = acc;
  }
  return log_sum_exp(g) - 0.5 * kLogTwoPi;
}

}  // namespace

void validate(const QuadratureConfig& quad) {
  if (quad.nodes < 3) throw InvalidInputError("quadrature needs at least 3 nodes");
  if (quad.rule == QuadratureRule::Trapezoid && quad.nodes % 2 == 0)
    throw InvalidInputError("trapezoid node count must be odd");
  if (quad.half_width < 8.0) throw InvalidInputError("quadrature half_width must be >= 8");
}

Eigen::MatrixXd RankOneCovarianceSpec::covariance() const {
  Eigen::MatrixXd r = d * d.transpose();
  r.diagonal().setOnes();
  return r;
}

double orthant_rank_one(const RankOneCovarianceSpec& spec, const QuadratureConfig& quad) {
  if (spec.d.size() == 0) throw InvalidInputError("rank-one spec needs at least one dimension");
  if ((spec.d.array().abs() >= 1.0).any())
    throw InvalidInputError("rank-one spec requires |d_i| < 1");
  const Eigen::VectorXd c =
      (spec.d.array() / (1.0 - spec.d.array().square()).sqrt()).matrix();
  const Grid grid = make_grid(quad);
  return log_probit_product_integral(c, grid, [](double) { return 0.0; });
}

double orthant_rank_one_max_normalized(const RankOneCovarianceSpec& spec,
                                       const QuadratureConfig& quad) {
  if ((spec.d.array().abs() >= 1.0).any())
    throw InvalidInputError("rank-one spec requires |d_i| < 1");
  const Eigen::VectorXd c =
      (spec.d.array() / (1.0 - spec.d.array().square()).sqrt()).matrix();
  const Grid grid = make_grid(quad);
  const Eigen::Index nk = grid.nodes.size();
  // Per-node running products, renormalized by the running maximum after each
  // factor; the divided-out maxima are restored on the log scale at the end.
  Eigen::VectorXd prod(nk);
  for (Eigen::Index k = 0; k < nk; ++k)
    prod[k] = std::exp(-0.5 * grid.nodes[k] * grid.nodes[k] + grid.log_weights[k]);
  double log_restore = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    for (Eigen::Index k = 0; k < nk; ++k)
      prod[k] *= 0.5 * std::erfc(-(c[i] * grid.nodes[k]) / kSqrtTwo);
    const double mx = prod.maxCoeff();
    if (mx <= 0.0) return kNegInf;
    prod /= mx;
    log_restore += std::log(mx);
  }
  return std::log(prod.sum()) + log_restore - 0.5 * kLogTwoPi;
}

PosteriorOracle linear_kernel_posterior_1d(const Eigen::VectorXd& x_train,
                                           const Eigen::VectorXd& labels, double x_test,
                                           const QuadratureConfig& quad) {
  if (x_train.size() == 0 || x_train.size() != labels.size())
    throw InvalidInputError("training features and labels must be non-empty and equal-length");
  if (!x_train.allFinite() || !std::isfinite(x_test))
    throw InvalidInputError("non-finite feature value");
  const Eigen::VectorXd c = (labels.array() * x_train.array()).matrix();
  const Grid grid = make_grid(quad);
  const double log_den = log_probit_product_integral(c, grid, [](double) { return 0.0; });
  const double log_num = log_probit_product_integral(
      c, grid, [x_test](double u) { return log_normal_cdf(x_test * u); });
  return {std::exp(log_num - log_den), log_den};
}

double soft_count_limit(int n1, int n2, double beta, const QuadratureConfig& quad) {
  if (n1 < 0 || n2 < 0) throw InvalidInputError("class counts must be nonnegative");
  if (!(beta > 0.0)) throw InvalidInputError("beta must be positive");
  const double s = std::sqrt(beta);
  const Grid grid = make_grid(quad);
  const Eigen::VectorXd none(0);
  const auto count_factors = [&](double u, int k1) {
    return (n1 + k1) * log_normal_cdf(s * u) + n2 * log_normal_cdf(-s * u);
  };
  const double log_den =
      log_probit_product_integral(none, grid, [&](double u) { return count_factors(u, 0); });
  const double log_num =
      log_probit_product_integral(none, grid, [&](double u) { return count_factors(u, 1); });
  return std::exp(log_num - log_den);
}

BruteForceResult brute_force_orthant(const Eigen::MatrixXd& covariance,
                                     const std::vector<Region>& region, std::uint64_t seed,
                                     std::int64_t samples) {
  const Eigen::Index n = covariance.rows();
  if (n == 0 || covariance.cols() != n) throw InvalidInputError("covariance must be square");
  if (n > 6) throw InvalidInputError("brute-force orthant oracle is limited to n <= 6");
  if (static_cast<Eigen::Index>(region.size()) != n)
    throw InvalidInputError("region spec length must match covariance dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  const RngStream stream(derive_key(seed, StreamTag::BruteForce));
  std::int64_t hits = 0;
  Eigen::VectorXd z(n);
  for (std::int64_t s = 0; s < samples; ++s) {
    for (Eigen::Index j = 0; j < n; ++j)
      z[j] = stream.normal(static_cast<std::uint64_t>(s) * n + j);
    bool inside = true;
    for (Eigen::Index i = 0; i < n && inside; ++i) {
      if (region[static_cast<std::size_t>(i)] == Region::FullLine) continue;
      inside = chol.row(i).head(i + 1).dot(z.head(i + 1)) >= 0.0;
    }
    hits += inside ? 1 : 0;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
  return {p, se};
}

double orthant_quadrature(const Eigen::MatrixXd& covariance, const std::vector<Region>& region,
                          int nodes_per_dim) {
  const Eigen::Index n = covariance.rows();
  if (n == 0 || covariance.cols() != n) throw InvalidInputError("covariance must be square");
  if (static_cast<Eigen::Index>(region.size()) != n)
    throw InvalidInputError("region spec length must match covariance dimension");

  // Full-line dimensions of a zero-mean Gaussian marginalize to the principal
  // submatrix of the constrained ones.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (region[static_cast<std::size_t>(i)] == Region::HalfLinePositive) keep.push_back(i);
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  if (m == 0) return 1.0;
  if (m > 6) throw InvalidInputError("orthant quadrature is limited to 6 constrained dims");
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = covariance(keep[a], keep[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  if (m == 1) return 0.5;

  if (nodes_per_dim <= 0) {
    const int defaults[] = {0, 0, 64, 64, 40, 24, 16};
    nodes_per_dim = defaults[m];
  }
  Eigen::VectorXd gx, gw;
  gauss_legendre(nodes_per_dim, 0.0, 1.0, gx, gw);

  // Tensor iteration over the (m-1)-dim unit cube; the integrand is the
  // product of surviving upper-tail masses along the sequential conditioning.
  const Eigen::Index dims = m - 1;
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  Eigen::VectorXd y(m);
  double total = 0.0;
  for (;;) {
    double f = 0.5;  // dim 1: P(v_1 >= 0) with lower bound Phi(0)
    double weight = 1.0;
    double d_prev = 0.5;
    bool dead = false;
    for (Eigen::Index i = 0; i < dims; ++i) {
      const double wi = gx[idx[static_cast<std::size_t>(i)]];
      weight *= gw[idx[static_cast<std::size_t>(i)]];
      y[i] = inverse_normal_cdf(d_prev + wi * (1.0 - d_prev));
      const double lower = -chol.row(i + 1).head(i + 1).dot(y.head(i + 1)) / chol(i + 1, i + 1);
      d_prev = normal_cdf(lower);
      const double slab = 1.0 - d_prev;
      if (slab <= 0.0) {
        dead = true;
        break;
      }
      f *= slab;
    }
    if (!dead) total += weight * f;

    Eigen::Index carry = 0;
    while (carry < dims) {
      if (++idx[static_cast<std::size_t>(carry)] < nodes_per_dim) break;
      idx[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == dims) break;
  }
  return total;
}

}  // namespace gpcmc::oracles
