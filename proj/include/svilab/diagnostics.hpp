#pragma once

#include <functional>
#include <string>
#include <vector>

#include "svilab/solvers.hpp"

namespace svi {

// F_M on the manifold.
using CovariantField = std::function<Vec(const Vec&)>;

// F_M(y) = P_{T(y)} A(y); valid when f and g have zero covariant gradient
// along M (indicator of a set containing M, g = 0).
CovariantField tangent_field(const StochasticVIProblem& p, const Manifold& m);

// Manifold of codimension 0: the whole space, P_T = I.
Manifold full_space_manifold(int dim);

double normal_cdf(double x, double mean, double variance);

// One-sample Kolmogorov-Smirnov distance against N(mean, variance).
double ks_statistic(std::vector<double> samples, double mean, double variance);

// Sample covariance (n - 1 denominator) of the rows and entrywise standard
// errors of each entry.
void sample_covariance(const Mat& rows, Mat& cov, Mat& stderr_out);

// ---------------------------------------------------------------------------
// Central limit theorem for averaged iterates.
// ---------------------------------------------------------------------------
struct CLTReport {
  int replications = 0;
  int excluded = 0;  // diverged replications
  long horizon = 0;
  long early_horizon = 0;  // K / 10
  Vec solution;
  Mat deviations;        // sqrt(K) (xbar_K - x*), one row per included replication
  Mat early_deviations;  // sqrt(K/10) (xbar_{K/10} - x*)
  Mat tangent_basis;     // U
  Mat tangent_projector;
  Mat tangent_coords;     // deviations * U
  Mat normal_components;  // deviations * (I - P_T)
  Mat early_normal_components;
  Mat empirical_covariance;
  Mat covariance_stderr;
  Mat predicted_covariance;
  Vec empirical_tangent_variance;
  Vec predicted_tangent_variance;
  std::vector<double> ks_statistics;  // per tangent coordinate; NaN if predicted variance is 0
  double mean_normal_norm = 0.0;        // mean |(I - P_T) d| at K
  double early_mean_normal_norm = 0.0;  // same at K / 10
  double tangent_variance = 0.0;        // trace of the tangent-coordinate covariance
  double normal_variance = 0.0;         // trace of the normal-component covariance
  std::vector<std::string> failures;    // one message per excluded replication
};

CLTReport monte_carlo_clt(const StochasticVIProblem& p, const Manifold& m, const Vec& x_star,
                          const Mat& predicted_cov, const SolverConfig& cfg, int replications,
                          int threads = 0);

// ---------------------------------------------------------------------------
// Approach to the manifold and the shadow sequence.
// ---------------------------------------------------------------------------
struct StudyOptions {
  int replications = 100;
  long k0 = 1000;      // stopping-time start
  double delta = 0.5;  // stopping-time radius around x*
  int grid_per_decade = 60;
  int min_survivors = 30;
  int min_fit_points = 20;
  bool shadow = true;
  int threads = 0;
};

struct DecayReport {
  long k0 = 0;
  double delta = 0.0;
  int replications = 0;
  std::vector<long> ks;
  std::vector<double> mean_sq_distance;  // over surviving replications
  std::vector<int> survivors;
  double slope = 0.0;  // NaN when degenerate
  bool degenerate = false;
  int fit_points = 0;
  double exit_fraction = 0.0;
};

struct ShadowReport {
  std::vector<long> ks;
  std::vector<double> alphas;
  std::vector<double> mean_sq_residual;
  std::vector<int> survivors;
  double slope = 0.0;  // log mean |E_k|^2 against log alpha_k; NaN when degenerate
  bool degenerate = false;
  int fit_points = 0;
  Vec projected_noise_mean;
  Vec projected_noise_stderr;
  long projected_noise_count = 0;
};

// Per-step shadow recursion defects of one stride-1 trajectory.
struct ShadowTrace {
  std::vector<long> ks;
  std::vector<double> alphas;
  std::vector<Vec> shadows;          // y_k
  std::vector<Vec> residuals;        // E_k
  std::vector<Vec> projected_noise;  // P_{T(y_k)} nu_k
  std::vector<Vec> field;            // F_M(y_k)
};

// E_k = (y_{k+1} - y_k + alpha_k F_M(y_k) + alpha_k P_{T(y_k)} nu_k) / alpha_k
// for k in [k_first, k_last], y_k = P_M(x_k). Throws OutOfChart.
ShadowTrace shadow_trace(const Manifold& m, const Trajectory& t, const CovariantField& fm,
                         long k_first, long k_last);

// Summary of a single trajectory's trace over its final decade.
ShadowReport shadow_residuals(const Manifold& m, const Trajectory& t, const CovariantField& fm,
                              long k_first = 1);

struct ManifoldStudy {
  DecayReport decay;
  ShadowReport shadow;
};

// Runs R stride-1 trajectories and aggregates dist^2(x_k, M) 1{tau > k} and
// |E_k|^2 1{tau > k} on a log-spaced grid. Throws InsufficientSurvivors.
ManifoldStudy manifold_study(const StochasticVIProblem& p, const Manifold& m,
                             const CovariantField& fm, const Vec& x_star, const SolverConfig& cfg,
                             const StudyOptions& opts);

DecayReport distance_decay(const StochasticVIProblem& p, const Manifold& m, const Vec& x_star,
                           const SolverConfig& cfg, StudyOptions opts);

// ---------------------------------------------------------------------------
// Sampled regularity constants.
// ---------------------------------------------------------------------------
struct RegularityOptions {
  int samples = 1000;
  double delta = 0.3;
  double min_distance = 1e-4;
  double alpha = 1e-6;
  std::uint64_t seed = 0;
};

struct RegularitySample {
  Vec x;
  Vec nu;
  double distance = 0.0;
  double aiming = 0.0;    // <G - nu, x - P_M x> / dist
  double e1_ratio = 0.0;  // |P_T(G - F_M(P_M x) - nu)| / ((1+|nu|)^2 (dist + alpha))
  double b_ratio = 0.0;   // (h(x') + <v, y - x'> - h(y)) / ((1+|v|) |y - x'|)
  double a_ratio = 0.0;   // |P_{T(y)}(v - grad_M h(y))| / ((1+|v|) |x' - y|)
};

struct RegularityReport {
  int requested = 0;
  int used = 0;
  double aiming_margin = 0.0;  // min over samples
  double e1_constant = 0.0;    // max over samples
  double b_leq_ratio = 0.0;    // max over samples
  double strong_a_ratio = 0.0;  // max over samples
  std::vector<double> stratum_upper;       // distance decade upper edges
  std::vector<double> stratum_min_aiming;  // min margin per decade
  bool aiming_nonmonotone = false;
  std::vector<int> violations;  // sample indices with aiming <= 0
  std::vector<RegularitySample> samples;
};

RegularityReport check_regularity(const StochasticVIProblem& p, const Manifold& m,
                                  const CovariantField& fm, const Vec& x_star,
                                  const RegularityOptions& opts);

// OLS slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

// Log-spaced integer grid in [lo, hi], deduplicated, always containing hi.
std::vector<long> log_grid(long lo, long hi, int per_decade);

}  // namespace svi
