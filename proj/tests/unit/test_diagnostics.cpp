#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "svilab/asymptotics.hpp"
#include "svilab/diagnostics.hpp"
#include "svilab/error.hpp"

using namespace svi;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

SolverConfig quick_config(long k, std::uint64_t seed) {
  SolverConfig c;
  c.iterations = k;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(KS, QuantileSamplesGiveHalfStep) {
  const boost::math::normal_distribution<double> ref(1.5, 2.0);
  std::vector<double> xs;
  const int n = 100;
  for (int i = 1; i <= n; ++i) xs.push_back(boost::math::quantile(ref, (i - 0.5) / n));
  EXPECT_NEAR(ks_statistic(xs, 1.5, 4.0), 1.0 / (2.0 * n), 1e-12);
}

TEST(KS, SingleSampleAtMean) { EXPECT_NEAR(ks_statistic({0.7}, 0.7, 2.0), 0.5, 1e-15); }

TEST(KS, RejectsDegenerateInput) {
  EXPECT_THROW(ks_statistic({1.0}, 0.0, 0.0), DegenerateVariance);
  EXPECT_THROW(ks_statistic({}, 0.0, 1.0), std::invalid_argument);
}

TEST(KS, CriticalValueCoverage) {
  int below = 0;
  // 1000 batches at nominal 95% coverage: binomial sd is about 7.
  for (int batch = 0; batch < 1000; ++batch) {
    Sampler s(derive_seed(77, "ks", batch));
    std::vector<double> xs;
    for (int i = 0; i < 200; ++i) xs.push_back(2.0 + 3.0 * s.normal());
    if (ks_statistic(xs, 2.0, 9.0) < 1.36 / std::sqrt(200.0)) ++below;
  }
  EXPECT_GE(below, 925);
  EXPECT_LE(below, 975);
}

TEST(KS, NormalCdfMatchesBoost) {
  const boost::math::normal_distribution<double> ref(-1.0, 0.5);
  for (double x = -4.0; x <= 2.0; x += 0.25)
    EXPECT_NEAR(normal_cdf(x, -1.0, 0.25), boost::math::cdf(ref, x), 1e-15);
}

TEST(Fits, OlsSlopeAndLogGrid) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  EXPECT_NEAR(ols_slope(x, y), 2.0, 1e-15);
  const auto g = log_grid(1000, 99999, 60);
  EXPECT_EQ(g.front(), 1000);
  EXPECT_EQ(g.back(), 99999);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(std::adjacent_find(g.begin(), g.end()), g.end());
  EXPECT_GT(g.size(), 110u);
}

TEST(CLT, QuadraticSampleMeanMatchesIdentity) {
  Vec mu(2);
  mu << 1.0, -0.5;
  const NLPProblem nlp = build_quadratic_instance(mu);
  const StochasticVIProblem p = nlp_to_vi(nlp);
  SolverConfig cfg = quick_config(20000, 3);
  cfg.schedule = StepSchedule(1.0, 0.6);
  const CLTReport r =
      monte_carlo_clt(p, full_space_manifold(2), mu, Mat::Identity(2, 2), cfg, 300, 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_LT(std::abs(r.empirical_covariance(i, j) - (i == j ? 1.0 : 0.0)),
                5.0 * r.covariance_stderr(i, j))
          << i << "," << j;
  EXPECT_EQ(r.excluded, 0);
  EXPECT_EQ(r.deviations.rows(), 300);
}

TEST(CLT, ZeroNoiseStartedAtSolution) {
  const TwoBallInstance tb = build_two_ball_instance();
  const StochasticVIProblem p = with_zero_noise(tb.problem);
  SolverConfig cfg = quick_config(1000, 1);
  cfg.initial_point = tb.solution;
  const CLTReport r = monte_carlo_clt(p, tb.manifold, tb.solution, Mat::Zero(3, 3), cfg, 5, 1);
  EXPECT_LT(r.deviations.norm(), 1e-10);
  EXPECT_LT(r.empirical_covariance.norm(), 1e-20);
  ASSERT_EQ(r.ks_statistics.size(), 1u);
  EXPECT_TRUE(std::isnan(r.ks_statistics[0]));
}

TEST(CLT, DecompositionAccountingAndDeterminism) {
  const TwoBallInstance tb = build_two_ball_instance();
  const AsymptoticsReport a = predicted_covariance(tb.problem, tb.nlp, tb.solution);
  const SolverConfig cfg = quick_config(5000, 8);
  const CLTReport r1 = monte_carlo_clt(tb.problem, tb.manifold, tb.solution, a.predicted_covariance, cfg, 24, 1);
  const CLTReport r4 = monte_carlo_clt(tb.problem, tb.manifold, tb.solution, a.predicted_covariance, cfg, 24, 4);
  EXPECT_EQ(r1.excluded + r1.deviations.rows(), 24);
  EXPECT_EQ((r1.deviations - r4.deviations).norm(), 0.0);
  EXPECT_EQ((r1.empirical_covariance - r4.empirical_covariance).norm(), 0.0);
  EXPECT_EQ(r1.ks_statistics, r4.ks_statistics);

  const Mat& u = r1.tangent_basis;
  const Mat np = Mat::Identity(3, 3) - r1.tangent_projector;
  for (Eigen::Index i = 0; i < r1.deviations.rows(); ++i) {
    const Vec d = r1.deviations.row(i).transpose();
    EXPECT_LE((u * u.transpose() * d + np * d - d).norm(), 1e-12);
  }
  const Mat c = r1.empirical_covariance;
  EXPECT_LT((c - c.transpose()).norm(), 1e-15);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(c).eigenvalues().minCoeff(), -1e-12);
}

TEST(CLT, DivergedReplicationsAreExcluded) {
  // x_2 = z_1 ~ N(0, I_3) leaves the bound with probability about 1/4.
  SolverConfig cfg = quick_config(2000, 4);
  cfg.divergence_bound = 2.05;
  StochasticVIProblem p = nlp_to_vi(build_quadratic_instance(Vec::Zero(3)));
  const CLTReport r = monte_carlo_clt(p, full_space_manifold(3), Vec::Zero(3),
                                      Mat::Identity(3, 3), cfg, 40, 1);
  EXPECT_GT(r.excluded, 0);
  EXPECT_EQ(r.excluded + r.deviations.rows(), 40);
  EXPECT_EQ(static_cast<int>(r.failures.size()), r.excluded);
}

TEST(CLT, RejectsGammaOne) {
  const TwoBallInstance tb = build_two_ball_instance();
  SolverConfig cfg = quick_config(100, 1);
  cfg.schedule = StepSchedule(1.0, 1.0);
  EXPECT_THROW(monte_carlo_clt(tb.problem, tb.manifold, tb.solution, Mat::Zero(3, 3), cfg, 5, 1),
               std::invalid_argument);
}

TEST(Shadow, NoiseFreeRunOnManifoldHasCurvatureLevelDefect) {
  const TwoBallInstance tb = build_two_ball_instance();
  const StochasticVIProblem p = with_zero_noise(tb.problem);
  SolverConfig cfg = quick_config(3000, 0);
  cfg.initial_point = v3(0, std::sqrt(3.0) * std::sin(0.6), std::sqrt(3.0) * std::cos(0.6));
  const Trajectory t = run_sfb(p, cfg);
  const CovariantField fm = tangent_field(p, tb.manifold);
  const ShadowTrace tr = shadow_trace(tb.manifold, t, fm, 1, cfg.iterations - 1);
  ASSERT_EQ(static_cast<long>(tr.ks.size()), cfg.iterations - 1);
  for (std::size_t i = 0; i < tr.ks.size(); ++i) {
    // One projected step differs from the flow by alpha |F| (|DF| + |F|/r);
    // |DF| = 1/sqrt(3) near x* on the circle of radius sqrt(3).
    const double f = tr.field[i].norm();
    const double bound = tr.alphas[i] * f * (1.0 + f);
    EXPECT_LE(tr.residuals[i].norm(), bound + 1e-12) << "k = " << tr.ks[i];
    EXPECT_LT(tb.manifold.defining_map(t.iterates[i]).norm(), 1e-9);
  }
}

TEST(Shadow, ProjectedNoiseIsCentered) {
  const TwoBallInstance tb = build_two_ball_instance();
  SolverConfig cfg = quick_config(10001, 6);
  const Trajectory t = run_sfb(tb.problem, cfg);
  const ShadowReport r = shadow_residuals(tb.manifold, t, tangent_field(tb.problem, tb.manifold), 50);
  EXPECT_EQ(r.projected_noise_count, 10000 - 49);
  for (int i = 0; i < 3; ++i)
    EXPECT_LE(std::abs(r.projected_noise_mean(i)), 3.0 * r.projected_noise_stderr(i) + 1e-12);
}

TEST(Shadow, RequiresStrideOne) {
  const TwoBallInstance tb = build_two_ball_instance();
  SolverConfig cfg = quick_config(100, 1);
  cfg.record_stride = 10;
  const Trajectory t = run_sfb(tb.problem, cfg);
  EXPECT_THROW(shadow_residuals(tb.manifold, t, tangent_field(tb.problem, tb.manifold)),
               std::invalid_argument);
}

TEST(Decay, NoiseFreeOnManifoldIsDegenerate) {
  const TwoBallInstance tb = build_two_ball_instance();
  const StochasticVIProblem p = with_zero_noise(tb.problem);
  SolverConfig cfg = quick_config(20000, 2);
  cfg.initial_point = tb.solution;
  StudyOptions o;
  o.replications = 30;
  o.k0 = 100;
  o.threads = 1;
  const DecayReport r = distance_decay(p, tb.manifold, tb.solution, cfg, o);
  for (double d : r.mean_sq_distance) EXPECT_LE(d, 1e-20);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isnan(r.slope));
}

TEST(Decay, ZeroRadiusLeavesNoSurvivors) {
  const TwoBallInstance tb = build_two_ball_instance();
  StudyOptions o;
  o.replications = 30;
  o.k0 = 10;
  o.delta = 0.0;
  o.threads = 1;
  try {
    distance_decay(tb.problem, tb.manifold, tb.solution, quick_config(200, 1), o);
    FAIL() << "expected InsufficientSurvivors";
  } catch (const InsufficientSurvivors& e) {
    EXPECT_EQ(e.survivors(), 0);
  }
}

TEST(Decay, SurvivorCountsAreMonotone) {
  const TwoBallInstance tb = build_two_ball_instance();
  StudyOptions o;
  o.replications = 40;
  o.k0 = 100;
  o.delta = 0.6;
  o.threads = 2;
  const ManifoldStudy st = manifold_study(tb.problem, tb.manifold, tangent_field(tb.problem, tb.manifold),
                                          tb.solution, quick_config(5000, 3), o);
  EXPECT_TRUE(std::is_sorted(st.decay.survivors.rbegin(), st.decay.survivors.rend()));
  EXPECT_GE(st.decay.survivors.back(), 30);
  EXPECT_EQ(st.decay.ks, st.shadow.ks);
}

TEST(Regularity, TwoBallAimingMarginPositive) {
  const TwoBallInstance tb = build_two_ball_instance();
  RegularityOptions o;
  o.samples = 1000;
  o.seed = 4;
  const CovariantField fm = tangent_field(tb.problem, tb.manifold);
  const RegularityReport r = check_regularity(tb.problem, tb.manifold, fm, tb.solution, o);
  EXPECT_GT(r.aiming_margin, 0.0);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_GT(r.used, 900);
  for (const auto& s : r.samples) EXPECT_GE(s.distance, 1e-10);

  // The tangential error vanishes by rotational symmetry; what remains is
  // roundoff of the 1/alpha difference quotient over dist + alpha >= 1e-4.
  EXPECT_LT(r.e1_constant, 1e-3);

  o.samples = 2000;
  const RegularityReport r2 = check_regularity(tb.problem, tb.manifold, fm, tb.solution, o);
  EXPECT_LT(r2.e1_constant, 1e-3);
  EXPECT_NEAR(r2.aiming_margin, r.aiming_margin, 0.05);
}

TEST(Regularity, RatiosReproducibleFromSamples) {
  const TwoBallInstance tb = build_two_ball_instance();
  RegularityOptions o;
  o.samples = 200;
  const RegularityReport r =
      check_regularity(tb.problem, tb.manifold, tangent_field(tb.problem, tb.manifold), tb.solution, o);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : r.samples) {
    m = std::min(m, s.aiming);
    const Vec px = project_manifold(s.x, tb.manifold);
    EXPECT_NEAR(s.distance, (s.x - px).norm(), 1e-14);
    const Vec g = generalized_gradient(tb.problem, o.alpha, s.x, s.nu);
    EXPECT_NEAR(s.aiming, (g - s.nu).dot(s.x - px) / s.distance, 1e-9);
  }
  EXPECT_EQ(m, r.aiming_margin);
  EXPECT_THROW(check_regularity(tb.problem, tb.manifold, tangent_field(tb.problem, tb.manifold),
                                tb.solution, RegularityOptions{50}),
               std::invalid_argument);
}
