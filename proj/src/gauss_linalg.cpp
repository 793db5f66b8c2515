#include "gpcmc/gauss_linalg.hpp"

#include <cmath>
#include <string>

namespace gpcmc {

namespace {

void check_cond_var(double var, double diag, int step) {
  if (!(var > kCondVarFloor * diag)) {
    throw DegenerateCovarianceError(
        "conditional variance " + std::to_string(var) + " collapsed at step " +
            std::to_string(step),
        step);
  }
}

}  // namespace

ConditionalMomentsState initial_moments(const Eigen::Ref<const Eigen::MatrixXd>& R) {
  if (R.rows() < 1 || R.rows() != R.cols())
    throw InvalidInputError("covariance must be square and non-empty");
  ConditionalMomentsState s;
  s.step_index = 1;
  s.cond_var = R(0, 0);
  check_cond_var(s.cond_var, R(0, 0), 1);
  return s;
}

Eigen::MatrixXd expand_inverse(const ConditionalMomentsState& state) {
  const int i = state.step_index;
  if (i < 1 || state.q_inv.rows() != i - 1 || state.b.size() != i - 1)
    throw InvalidInputError("inconsistent moments state");
  if (!(state.cond_var > 0.0)) throw InvalidInputError("moments state has no variance");

  Eigen::MatrixXd q(i, i);
  const double inv_var = 1.0 / state.cond_var;
  if (i > 1) {
    q.topLeftCorner(i - 1, i - 1) = state.q_inv + inv_var * (state.b * state.b.transpose());
    q.topRightCorner(i - 1, 1) = -inv_var * state.b;
    q.bottomLeftCorner(1, i - 1) = -inv_var * state.b.transpose();
  }
  q(i - 1, i - 1) = inv_var;
  q = ((q + q.transpose()) * 0.5).eval();
  return q;
}

ConditionalMomentsState advance_moments(const ConditionalMomentsState& state,
                                        const Eigen::Ref<const Eigen::MatrixXd>& R) {
  const int i = state.step_index;
  if (R.rows() < i + 1 || R.rows() != R.cols())
    throw InvalidInputError("covariance too small for step " + std::to_string(i + 1));

  ConditionalMomentsState next;
  next.step_index = i + 1;
  next.q_inv = expand_inverse(state);

  const auto r_col = R.col(i).head(i);
  const auto leading = R.topLeftCorner(i, i);
  next.b = next.q_inv * r_col;
  // One refinement sweep against the leading block keeps the chain's drift
  // below the direct-solve noise floor on ill-conditioned inputs; still O(i^2).
  next.b += next.q_inv * (r_col - leading * next.b);
  next.cond_var = R(i, i) - r_col.dot(next.b);
  check_cond_var(next.cond_var, R(i, i), i + 1);
  return next;
}

DirectMoments direct_moments(const Eigen::Ref<const Eigen::MatrixXd>& R, int i) {
  if (i < 2 || i > R.rows() || R.rows() != R.cols())
    throw InvalidInputError("direct moments need 2 <= i <= dim(R)");
  const Eigen::Index m = i - 1;
  Eigen::LLT<Eigen::MatrixXd> llt(R.topLeftCorner(m, m));
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("leading principal block is not positive definite", i);
  DirectMoments out;
  out.b = llt.solve(R.col(m).head(m));
  out.cond_var = R(m, m) - R.col(m).head(m).dot(out.b);
  check_cond_var(out.cond_var, R(m, m), i);
  return out;
}

AppendixWorkspace build_appendix_workspace(const CovarianceBundle& bundle,
                                           const Eigen::Ref<const Eigen::VectorXd>& labels,
                                           Eigen::Index test_index) {
  const Eigen::Index n = bundle.train_count();
  if (labels.size() != n) throw InvalidInputError("label count must match training block");
  if (test_index < 0 || test_index >= bundle.test_count())
    throw InvalidInputError("test index out of range");

  Eigen::LLT<Eigen::MatrixXd> llt(bundle.sigma);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("training covariance is not positive definite");

  AppendixWorkspace w;
  const Eigen::VectorXd cross = bundle.cross.col(test_index);
  w.a = llt.solve(cross);
  w.sigma_star_sq = bundle.test_diag[test_index] - cross.dot(w.a);
  if (!(w.sigma_star_sq > 0.0))
    throw DegenerateCovarianceError("composite covariance is not positive definite");

  w.a12 = Eigen::MatrixXd::Zero(n + 1, n + 1);
  w.a12(0, 0) = 1.0;
  w.a12.bottomRightCorner(n, n) = labels.asDiagonal();

  const Eigen::MatrixXd sigma_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double inv_star = 1.0 / w.sigma_star_sq;
  w.a22.resize(n + 1, n + 1);
  w.a22(0, 0) = 1.0 + inv_star;
  w.a22.topRightCorner(1, n) = -inv_star * w.a.transpose();
  w.a22.bottomLeftCorner(n, 1) = -inv_star * w.a;
  w.a22.bottomRightCorner(n, n) =
      Eigen::MatrixXd::Identity(n, n) + sigma_inv + inv_star * (w.a * w.a.transpose());

  w.A = Eigen::MatrixXd::Identity(n + 1, n + 1) - w.a12 * w.a22.ldlt().solve(w.a12);

  // q via the rank-one inversion route: q = sigma*^2 + b' B^{-1} b with
  // B = diag(1, I + Sigma^{-1}) and b = (1, -a)'.
  const Eigen::MatrixXd b_inner = Eigen::MatrixXd::Identity(n, n) + sigma_inv;
  w.q = w.sigma_star_sq + 1.0 + w.a.dot(b_inner.ldlt().solve(w.a));
  return w;
}

double verify_appendix_identity(const CovarianceBundle& bundle,
                                const Eigen::Ref<const Eigen::VectorXd>& labels) {
  const Eigen::Index n = bundle.train_count();
  if (bundle.test_count() < 1) throw InvalidInputError("bundle has no test pattern");
  double worst = 0.0;
  for (Eigen::Index t = 0; t < bundle.test_count(); ++t) {
    const AppendixWorkspace w = build_appendix_workspace(bundle, labels, t);
    Eigen::MatrixXd R(n + 1, n + 1);
    R(0, 0) = 1.0 + bundle.test_diag[t];
    const Eigen::VectorXd signed_cross =
        (labels.array() * bundle.cross.col(t).array()).matrix();
    R.topRightCorner(1, n) = signed_cross.transpose();
    R.bottomLeftCorner(n, 1) = signed_cross;
    R.bottomRightCorner(n, n) =
        labels.asDiagonal() * (Eigen::MatrixXd::Identity(n, n) + bundle.sigma) *
        labels.asDiagonal();
    const double residual =
        (w.A * R - Eigen::MatrixXd::Identity(n + 1, n + 1)).array().abs().maxCoeff();
    worst = std::max(worst, residual);
  }
  return worst;
}

}  // namespace gpcmc
