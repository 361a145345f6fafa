#include "svilab/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "svilab/error.hpp"

namespace svi {

std::vector<int> active_set(const NLPProblem& nlp, const Vec& x, double tol) {
  std::vector<int> out;
  for (std::size_t i = 0; i < nlp.constraints.size(); ++i) {
    const auto& c = nlp.constraints[i];
    const double v = c.function.value(x);
    if (c.kind == ConstraintKind::kEquality) {
      out.push_back(static_cast<int>(i));
      continue;
    }
    if (v > tol)
      throw Infeasible("constraint " + std::to_string(i) + " violated by " + std::to_string(v));
    if (std::abs(v) <= tol) out.push_back(static_cast<int>(i));
  }
  return out;
}

Mat active_jacobian(const NLPProblem& nlp, const Vec& x, const std::vector<int>& active) {
  Mat j(static_cast<Eigen::Index>(active.size()), x.size());
  for (std::size_t r = 0; r < active.size(); ++r)
    j.row(static_cast<Eigen::Index>(r)) =
        nlp.constraints[static_cast<std::size_t>(active[r])].function.gradient(x).transpose();
  return j;
}

MultiplierResult lagrange_multipliers(const NLPProblem& nlp, const Vec& x,
                                      const std::vector<int>& active) {
  MultiplierResult out;
  out.multipliers = Vec::Zero(static_cast<Eigen::Index>(nlp.constraints.size()));
  const Vec grad = nlp.objective.mean_gradient(x);
  if (active.empty()) {
    out.residual = grad.norm();
    out.min_singular_value = std::numeric_limits<double>::infinity();
    return out;
  }
  const Mat jt = active_jacobian(nlp, x, active).transpose();
  Eigen::JacobiSVD<Mat> svd(jt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Eigen::Index n = static_cast<Eigen::Index>(active.size());
  out.min_singular_value = n <= jt.rows() ? sv(n - 1) : 0.0;
  if (n > jt.rows() || !(sv(0) > 0.0) || sv(n - 1) <= kRankRatio * sv(0))
    throw RankDeficient("active constraint gradients are linearly dependent (LICQ fails)");
  const Vec y = svd.solve(-grad);
  for (Eigen::Index r = 0; r < n; ++r) out.multipliers(active[static_cast<std::size_t>(r)]) = y(r);
  out.residual = (grad + jt * y).norm();
  return out;
}

Mat covariant_hessian(const NLPProblem& nlp, const Vec& x, const Vec& multipliers,
                      const std::vector<int>& active) {
  const Mat p = tangent_projector(active_jacobian(nlp, x, active));
  const Mat h = p * nlp.lagrangian_hessian(x, multipliers) * p;
  return 0.5 * (h + h.transpose());
}

Mat solution_jacobian(const Mat& cov_hessian, const Mat& p_t) {
  return pinv_on_subspace(cov_hessian, p_t);
}

KKTReport analyze_kkt(const NLPProblem& nlp, const Vec& x, const KKTTolerances& tol) {
  KKTReport r;
  r.active_set = active_set(nlp, x, tol.active);
  const MultiplierResult mult = lagrange_multipliers(nlp, x, r.active_set);
  r.multipliers = mult.multipliers;
  r.licq_ok = true;
  r.licq_min_singular_value = mult.min_singular_value;
  r.stationarity_residual = mult.residual;

  r.sc_margin = std::numeric_limits<double>::infinity();
  for (int i : r.active_set)
    if (nlp.constraints[static_cast<std::size_t>(i)].kind == ConstraintKind::kInequality)
      r.sc_margin = std::min(r.sc_margin, r.multipliers(i));
  if (r.sc_margin < -1e-12)
    r.warnings.push_back("negative multiplier on an active inequality: x is not a KKT point");
  else if (r.sc_margin < tol.sc_warn)
    r.warnings.push_back("strict complementarity margin below " + std::to_string(tol.sc_warn));

  const Mat p = tangent_projector(active_jacobian(nlp, x, r.active_set));
  const Mat u = range_basis(p);
  r.tangent_dim = static_cast<int>(u.cols());
  if (u.cols() == 0) {
    r.sosc_min_eig = std::numeric_limits<double>::infinity();
  } else {
    const Mat h = nlp.lagrangian_hessian(x, r.multipliers);
    const Mat restricted = u.transpose() * h * u;
    r.sosc_min_eig =
        Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (restricted + restricted.transpose()))
            .eigenvalues()(0);
  }
  if (r.sosc_min_eig < tol.sosc_warn)
    r.warnings.push_back("second-order sufficiency fails on the tangent space");
  return r;
}

void estimate_noise_covariance(const StochasticVIProblem& problem, const Vec& x, long samples,
                               std::uint64_t seed, Mat& cov, Mat& stderr_out) {
  if (samples < 2) throw std::invalid_argument("covariance estimate needs >= 2 samples");
  const Eigen::Index d = problem.dim;
  Mat draws(samples, d);
  Sampler sampler(seed);
  for (long i = 0; i < samples; ++i) draws.row(i) = problem.sample_map(x, problem.draw(sampler)).transpose();
  const Vec mean = draws.colwise().mean().transpose();
  const Mat centered = draws.rowwise() - mean.transpose();
  const double n = static_cast<double>(samples);
  cov = centered.transpose() * centered / (n - 1.0);
  stderr_out.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::ArrayXd prod = centered.col(i).array() * centered.col(j).array();
      const double m = prod.mean();
      stderr_out(i, j) = std::sqrt(std::max(0.0, (prod - m).square().mean()) / n);
    }
}

AsymptoticsReport predicted_covariance(const StochasticVIProblem& problem, const NLPProblem& nlp,
                                       const Vec& x, long mc_samples, std::uint64_t seed,
                                       const KKTTolerances& tol) {
  AsymptoticsReport rep;
  rep.kkt = analyze_kkt(nlp, x, tol);
  if (rep.kkt.sc_margin < -1e-12)
    throw Error("candidate point is not a KKT point (negative active multiplier)");
  rep.warnings = rep.kkt.warnings;

  rep.tangent_projector = tangent_projector(active_jacobian(nlp, x, rep.kkt.active_set));
  rep.tangent_basis = range_basis(rep.tangent_projector);
  rep.covariant_hessian = covariant_hessian(nlp, x, rep.kkt.multipliers, rep.kkt.active_set);
  rep.solution_jacobian = solution_jacobian(rep.covariant_hessian, rep.tangent_projector);

  const Eigen::Index d = problem.dim;
  if (problem.noise_covariance) {
    rep.noise_covariance = *problem.noise_covariance;
    rep.noise_covariance_stderr = Mat::Zero(d, d);
    rep.noise_covariance_closed_form = true;
  } else {
    estimate_noise_covariance(problem, x, mc_samples, seed, rep.noise_covariance,
                              rep.noise_covariance_stderr);
  }
  const Mat& js = rep.solution_jacobian;
  const Mat pred = js * rep.noise_covariance * js.transpose();
  rep.predicted_covariance = 0.5 * (pred + pred.transpose());
  return rep;
}

}  // namespace svi
