#include <gtest/gtest.h>

#include <cmath>

#include "svilab/asymptotics.hpp"
#include "svilab/error.hpp"
#include "oracles.hpp"

using namespace svi;
using namespace svi::oracle;

namespace {

NLPProblem halfspace_nlp() {
  // min x1 s.t. -x1 <= 0.
  NLPProblem nlp;
  nlp.dim = 2;
  Vec c(2);
  c << 1.0, 0.0;
  nlp.objective.mean_gradient = [c](const Vec&) -> Vec { return c; };
  nlp.objective.mean_value = [c](const Vec& x) { return c.dot(x); };
  nlp.objective.mean_hessian = [](const Vec&) -> Mat { return Mat::Zero(2, 2); };
  Vec a(2);
  a << -1.0, 0.0;
  nlp.constraints = {halfspace_constraint(a, 0.0)};
  return nlp;
}

}  // namespace

TEST(ActiveSet, Examples) {
  const TwoBallInstance tb = build_two_ball_instance();
  EXPECT_EQ(active_set(tb.nlp, tb.solution, 1e-8), (std::vector<int>{0, 1}));
  EXPECT_TRUE(active_set(tb.nlp, v3(0, 0, 0), 1e-8).empty());
  EXPECT_EQ(active_set(tb.nlp, v3(1, 0, 0), 1e-8), (std::vector<int>{0}));
  EXPECT_THROW(active_set(tb.nlp, v3(0, 0, 3), 1e-8), Infeasible);
}

TEST(Multipliers, TwoBallMatchesHandSolvedSystem) {
  const TwoBallInstance tb = build_two_ball_instance();
  // Oracle: stationarity rows x1 and x3 of grad f + y1 grad g1 + y2 grad g2 = 0
  // with grad f = (0,0,-1), grad g_i = 2 (x* - c_i), solved by Cramer's rule.
  const double s3 = std::sqrt(3.0);
  const double a11 = 2.0, a12 = -2.0, a21 = 2.0 * s3, a22 = 2.0 * s3;
  const double b1 = 0.0, b2 = 1.0;
  const double det = a11 * a22 - a12 * a21;
  const double y1 = (b1 * a22 - a12 * b2) / det;
  const double y2 = (a11 * b2 - b1 * a21) / det;

  const MultiplierResult m = lagrange_multipliers(tb.nlp, tb.solution, {0, 1});
  EXPECT_NEAR(m.multipliers(0), y1, 1e-10);
  EXPECT_NEAR(m.multipliers(1), y2, 1e-10);
  EXPECT_NEAR(m.multipliers(0), 0.14433756729740643, 1e-10);
  EXPECT_LT(m.residual, 1e-12);
}

TEST(Multipliers, HalfspaceAndEmptySet) {
  const NLPProblem nlp = halfspace_nlp();
  const MultiplierResult m = lagrange_multipliers(nlp, Vec::Zero(2), {0});
  EXPECT_NEAR(m.multipliers(0), 1.0, 1e-14);

  const MultiplierResult e = lagrange_multipliers(nlp, Vec::Zero(2), {});
  EXPECT_EQ(e.multipliers(0), 0.0);
  EXPECT_DOUBLE_EQ(e.residual, 1.0);
}

TEST(Multipliers, LicqFailure) {
  NLPProblem nlp = halfspace_nlp();
  Vec a(2);
  a << -2.0, 0.0;
  nlp.constraints.push_back(halfspace_constraint(a, 0.0));
  EXPECT_THROW(lagrange_multipliers(nlp, Vec::Zero(2), {0, 1}), RankDeficient);
}

TEST(CovariantHessian, Examples) {
  const TwoBallInstance tb = build_two_ball_instance();
  const double y = 1.0 / (4.0 * std::sqrt(3.0));
  Vec mult(2);
  mult << y, y;
  const Mat h = covariant_hessian(tb.nlp, tb.solution, mult, {0, 1});
  Mat expect = Mat::Zero(3, 3);
  expect(1, 1) = 1.0 / std::sqrt(3.0);
  EXPECT_LT((h - expect).norm(), 1e-12);

  const NLPProblem quad = build_quadratic_instance(Vec::Zero(3));
  EXPECT_LT((covariant_hessian(quad, Vec::Zero(3), Vec(0), {}) - Mat::Identity(3, 3)).norm(), 1e-15);

  const NLPProblem lin = halfspace_nlp();
  Vec one(1);
  one << 1.0;
  EXPECT_LT(covariant_hessian(lin, Vec::Zero(2), one, {0}).norm(), 1e-15);
}

TEST(SolutionJacobian, Examples) {
  Mat p = Mat::Zero(3, 3);
  p(1, 1) = 1.0;
  const Mat j = solution_jacobian(p / std::sqrt(3.0), p);
  EXPECT_LT((j - std::sqrt(3.0) * p).norm(), 1e-12);
  EXPECT_THROW(solution_jacobian(Mat::Zero(3, 3), p), SingularOnTangent);
}

TEST(KKT, TwoBallReport) {
  const TwoBallInstance tb = build_two_ball_instance();
  const KKTReport r = analyze_kkt(tb.nlp, tb.solution);
  EXPECT_EQ(r.active_set, (std::vector<int>{0, 1}));
  EXPECT_TRUE(r.licq_ok);
  EXPECT_NEAR(r.licq_min_singular_value, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_GT(r.sc_margin, 0.0);
  EXPECT_NEAR(r.sosc_min_eig, 1.0 / std::sqrt(3.0), 1e-10);
  EXPECT_EQ(r.tangent_dim, 1);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(PredictedCovariance, TwoBall) {
  const TwoBallInstance tb = build_two_ball_instance();
  const AsymptoticsReport r = predicted_covariance(tb.problem, tb.nlp, tb.solution);
  Mat expect = Mat::Zero(3, 3);
  expect(1, 1) = 3.0;
  EXPECT_LT((r.predicted_covariance - expect).norm(), 1e-12);
  EXPECT_TRUE(r.noise_covariance_closed_form);

  const Mat& c = r.predicted_covariance;
  const Mat np = Mat::Identity(3, 3) - r.tangent_projector;
  EXPECT_LT((np * c).norm(), 1e-10);
  EXPECT_LT((c - c.transpose()).norm(), 1e-15);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(c).eigenvalues().minCoeff(), -1e-12);
  const Mat& js = r.solution_jacobian;
  EXPECT_LT((js * r.covariant_hessian * js - js).norm(), 1e-10);
}

TEST(PredictedCovariance, QuadraticAndZeroNoise) {
  Vec mu(3);
  mu << 0.5, -1.0, 2.0;
  const NLPProblem nlp = build_quadratic_instance(mu);
  const AsymptoticsReport r = predicted_covariance(nlp_to_vi(nlp), nlp, mu);
  EXPECT_LT((r.predicted_covariance - Mat::Identity(3, 3)).norm(), 1e-12);

  const TwoBallInstance tb = build_two_ball_instance();
  const AsymptoticsReport z = predicted_covariance(with_zero_noise(tb.problem), tb.nlp, tb.solution);
  EXPECT_EQ(z.predicted_covariance.norm(), 0.0);
}

TEST(PredictedCovariance, MonteCarloNoiseEstimate) {
  TwoBallInstance tb = build_two_ball_instance();
  tb.problem.noise_covariance.reset();
  const AsymptoticsReport r = predicted_covariance(tb.problem, tb.nlp, tb.solution, 100000, 5);
  EXPECT_FALSE(r.noise_covariance_closed_form);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_LT(std::abs(r.noise_covariance(i, j) - (i == j ? 1.0 : 0.0)),
                5.0 * r.noise_covariance_stderr(i, j));
  EXPECT_NEAR(r.predicted_covariance(1, 1), 3.0, 5.0 * 3.0 * r.noise_covariance_stderr(1, 1));
}

TEST(PredictedCovariance, RejectsNonKKTPoint) {
  const TwoBallInstance tb = build_two_ball_instance();
  EXPECT_THROW(predicted_covariance(tb.problem, tb.nlp, v3(0, 0, -std::sqrt(3.0))), Error);
}

TEST(Oracles, ConstraintDerivativesMatchFiniteDifferences) {
  const TwoBallInstance tb = build_two_ball_instance();
  Sampler s(31);
  for (int t = 0; t < 50; ++t) {
    const Vec x = s.normal_vec(3);
    for (const auto& c : tb.nlp.constraints) {
      EXPECT_LT(rel_err(c.function.gradient(x), fd_gradient(c.function.value, x)), 1e-5);
      EXPECT_LT(rel_err(c.function.hessian(x), fd_jacobian(c.function.gradient, x)), 1e-5);
    }
  }
}

TEST(Oracles, LagrangianHessianMatchesFiniteDifferences) {
  const TwoBallInstance tb = build_two_ball_instance();
  Vec mu(3);
  mu << 1.0, 2.0, -0.5;
  const NLPProblem quad = build_quadratic_instance(mu);
  Sampler s(32);
  for (int t = 0; t < 50; ++t) {
    const Vec x = s.normal_vec(3);
    Vec y(2);
    y << std::abs(s.normal()), std::abs(s.normal());
    auto grad_l = [&](const Vec& z) { return tb.nlp.lagrangian_gradient(z, y); };
    EXPECT_LT(rel_err(tb.nlp.lagrangian_hessian(x, y), fd_jacobian(grad_l, x)), 1e-5);
    EXPECT_LT(rel_err(tb.nlp.objective.mean_gradient(x), fd_gradient(tb.nlp.objective.mean_value, x)),
              1e-5);
    EXPECT_LT(rel_err(quad.objective.mean_gradient(x), fd_gradient(quad.objective.mean_value, x)), 1e-5);
    EXPECT_LT(rel_err(quad.objective.mean_hessian(x), fd_jacobian(quad.objective.mean_gradient, x)), 1e-5);
  }
}

TEST(Oracles, ManifoldJacobianMatchesFiniteDifferences) {
  const TwoBallInstance tb = build_two_ball_instance();
  Sampler s(33);
  for (int t = 0; t < 50; ++t) {
    const Vec x = s.normal_vec(3);
    EXPECT_LT(rel_err(tb.manifold.jacobian(x), fd_jacobian(tb.manifold.defining_map, x)), 1e-5);
  }
}

TEST(Problems, NoiseSplitAndZeroNoise) {
  const TwoBallInstance tb = build_two_ball_instance();
  const Vec z = v3(0.3, -0.2, 1.1);
  const NoiseSplit n = evaluate_noise(tb.problem, v3(0.1, 0.2, 1.0), z);
  EXPECT_LT((n.nu - z).norm(), 1e-15);
  EXPECT_LT((n.nu1 - z).norm(), 1e-15);
  EXPECT_LT(n.nu2.norm(), 1e-15);

  const StochasticVIProblem zero = with_zero_noise(tb.problem);
  Sampler s(1);
  EXPECT_EQ(zero.draw(s).norm(), 0.0);

  StochasticVIProblem no_mean = tb.problem;
  no_mean.mean_map.reset();
  EXPECT_THROW(no_mean.mean(tb.solution), MissingMeanMap);
}

TEST(Problems, ActiveConstraintManifold) {
  const NLPProblem box = build_box_linear_instance(v3(1, -1, 2));
  const auto active = active_set(box, *box.solution_hint, 1e-8);
  EXPECT_EQ(active.size(), 3u);
  const Manifold m = active_constraint_manifold(box, active);
  EXPECT_LT(tangent_projector_at(m, *box.solution_hint).norm(), 1e-15);
  EXPECT_LT((project_manifold(v3(0.1, 0.9, 0.05), m) - *box.solution_hint).norm(), 1e-10);
}

TEST(Problems, TwoBallSolutionMaximizesHeightOverLens) {
  // Brute-force grid over the bounding box of the lens.
  const TwoBallInstance tb = build_two_ball_instance();
  const int n = 201;
  double best = -1.0;
  Vec arg;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec x = v3(-1.0 + 2.0 * i / (n - 1), -2.0 + 4.0 * j / (n - 1), -2.0 + 4.0 * k / (n - 1));
        if (!in_lens(x)) continue;
        if (x(2) > best) {
          best = x(2);
          arg = x;
        }
      }
  EXPECT_NEAR(best, tb.solution(2), 0.03);
  EXPECT_LT((arg - tb.solution).norm(), 0.05);
  EXPECT_DOUBLE_EQ(tb.solution(2), std::sqrt(3.0));
  for (const auto& c : tb.nlp.constraints) EXPECT_NEAR(c.function.value(tb.solution), 0.0, 1e-12);
  const KKTReport r = analyze_kkt(tb.nlp, tb.solution);
  EXPECT_LE(r.stationarity_residual, 1e-12);
  EXPECT_GT(r.sc_margin, 0.0);
}
