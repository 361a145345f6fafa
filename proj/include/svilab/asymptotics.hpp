#pragma once

#include <string>
#include <vector>

#include "svilab/problems.hpp"

namespace svi {

struct KKTTolerances {
  double active = 1e-8;
  double sc_warn = 1e-8;     // strict complementarity margin
  double sosc_warn = 1e-10;  // smallest covariant Hessian eigenvalue
};

struct KKTReport {
  std::vector<int> active_set;  // 0-based constraint indices
  Vec multipliers;              // one per constraint, zero off the active set
  bool licq_ok = false;
  double licq_min_singular_value = 0.0;
  double sc_margin = 0.0;  // min active inequality multiplier (+inf if none)
  double sosc_min_eig = 0.0;
  double stationarity_residual = 0.0;
  int tangent_dim = 0;
  std::vector<std::string> warnings;
};

struct AsymptoticsReport {
  KKTReport kkt;
  Mat tangent_projector;
  Mat tangent_basis;  // U, orthonormal columns spanning range(P_T)
  Mat covariant_hessian;
  Mat solution_jacobian;
  Mat noise_covariance;
  Mat noise_covariance_stderr;  // zero when the closed form was used
  bool noise_covariance_closed_form = false;
  Mat predicted_covariance;
  std::vector<std::string> warnings;
};

// {i : |g_i(x)| <= tol} plus every equality. Throws Infeasible when an
// inequality exceeds tol.
std::vector<int> active_set(const NLPProblem& nlp, const Vec& x, double tol);

// Rows are the active constraint gradients at x.
Mat active_jacobian(const NLPProblem& nlp, const Vec& x, const std::vector<int>& active);

struct MultiplierResult {
  Vec multipliers;  // full length, zero off the active set
  double residual = 0.0;
  double min_singular_value = 0.0;
};

// Least squares for grad f(x) + sum_{i in I} y_i grad g_i(x) = 0.
MultiplierResult lagrange_multipliers(const NLPProblem& nlp, const Vec& x,
                                      const std::vector<int>& active);

// P_T hess_xx L(x, y) P_T with P_T from the active gradients.
Mat covariant_hessian(const NLPProblem& nlp, const Vec& x, const Vec& multipliers,
                      const std::vector<int>& active);

// grad sigma(0) = (P_T H P_T)^+. Throws SingularOnTangent.
Mat solution_jacobian(const Mat& covariant_hessian, const Mat& p_t);

KKTReport analyze_kkt(const NLPProblem& nlp, const Vec& x, const KKTTolerances& tol = {});

// grad sigma(0) Cov(A(x*, z)) grad sigma(0)^T. Uses the problem's
// closed-form covariance when declared, else mc_samples draws at x.
AsymptoticsReport predicted_covariance(const StochasticVIProblem& problem, const NLPProblem& nlp,
                                       const Vec& x, long mc_samples = 100000,
                                       std::uint64_t seed = 0, const KKTTolerances& tol = {});

// Empirical Cov(A(x, z)) and entrywise standard errors.
void estimate_noise_covariance(const StochasticVIProblem& problem, const Vec& x, long samples,
                               std::uint64_t seed, Mat& cov, Mat& stderr_out);

}  // namespace svi
