#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svilab/problems.hpp"

namespace svi {

// alpha_k = c * k^(-gamma), gamma in (1/2, 1].
class StepSchedule {
 public:
  StepSchedule(double c, double gamma);
  double c() const { return c_; }
  double gamma() const { return gamma_; }
  double operator()(long k) const;

 private:
  double c_;
  double gamma_;
};

double step_size(const StepSchedule& s, long k);

struct SolverConfig {
  StepSchedule schedule{1.0, 0.75};
  long iterations = 1000;  // K: the trajectory holds x_1, ..., x_K
  std::uint64_t seed = 0;
  long burn_in = 1;         // averaging covers x_burn_in, ..., x_k
  long record_stride = 1;   // store every stride-th iterate (and x_K)
  bool record_iterates = true;
  bool record_distances = true;  // per-step dist(x_k, M) when a manifold is given
  std::optional<Vec> initial_point;  // defaults to the origin
  double divergence_bound = 1e6;

  void validate() const;
};

struct Trajectory {
  StepSchedule schedule{1.0, 0.75};
  long iterations = 0;
  long burn_in = 1;
  std::vector<long> recorded_indices;  // 1-based k
  std::vector<Vec> iterates;           // x_k at recorded indices
  std::vector<Vec> averages;           // running average at recorded indices
  std::vector<Vec> noises;             // nu_k at recorded indices (k < K)
  Vec final_iterate;
  Vec final_average;
  // dist(x_k, M) for k = 1..K; NaN where x_k is outside the chart.
  std::vector<double> distances;
  std::uint64_t noise_checksum = 0;
};

// Direction-based form: G_alpha with A(x) + nu replaced by `direction`.
Vec generalized_gradient_dir(const StochasticVIProblem& p, double alpha, const Vec& x,
                             const Vec& direction);

// G_alpha(x, nu) = (x - prox_{alpha f}(x - alpha (A(x) + s_g(x) + nu))) / alpha.
// Reduces to A(x) + s_g(x) + nu when f = 0 and to the projected-gradient
// form when f is an indicator.
Vec generalized_gradient(const StochasticVIProblem& p, double alpha, const Vec& x, const Vec& nu);

// x_{k+1} = x_k - alpha_k G_{alpha_k}(x_k, nu_k).
Trajectory run_sfb(const StochasticVIProblem& p, const SolverConfig& cfg,
                   const Manifold* manifold = nullptr);

struct SAASettings {
  double tol = 1e-8;
  long max_iter = 1000000;
  int lipschitz_probes = 20;
  double probe_radius = 1e-2;
  std::optional<Vec> initial_point;
};

struct SAAResult {
  Vec solution;
  double residual = 0.0;   // |x - T(x)| / alpha at the returned point
  double step = 0.0;       // alpha = 1 / L_hat
  double lipschitz_estimate = 0.0;
  long iterations = 0;
};

// Solves 0 in A_S(x) + dg(x) + df(x), A_S the empirical mean over
// `sample_count` draws, by deterministic forward-backward iteration.
SAAResult run_saa(const StochasticVIProblem& p, long sample_count, std::uint64_t seed,
                  const SAASettings& inner = {});

// Same, with a caller-supplied sample batch.
SAAResult run_saa_on_samples(const StochasticVIProblem& p, const std::vector<Vec>& samples,
                             const SAASettings& inner = {});

}  // namespace svi
