#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "svilab/geometry.hpp"
#include "svilab/random.hpp"

namespace svi {

using SampleMap = std::function<Vec(const Vec& x, const Vec& z)>;
using MeanMap = std::function<Vec(const Vec& x)>;
using SampleDraw = std::function<Vec(Sampler&)>;

// Locally Lipschitz g with a deterministic subgradient selection s_g.
struct SubgradientOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> selection;
};

struct NoiseModel {
  // q(x): declared bound on E|nu|^4 at x. Empty when no bound is declared.
  std::function<double(const Vec&)> fourth_moment_bound;
  // nu = nu1 + nu2(x) available in closed form via A(x,z) - A(x).
  bool decomposable = false;
};

// 0 in E[A(x,z)] + dg(x) + df(x), accessed through samples z ~ P.
struct StochasticVIProblem {
  std::string name;
  int dim = 0;
  SampleMap sample_map;
  std::optional<MeanMap> mean_map;
  SampleDraw draw;
  std::optional<SubgradientOracle> g_part;
  ProxFunction f_part;
  std::optional<Vec> solution_hint;
  // Closed-form Cov(A(x*, z)), when known.
  std::optional<Mat> noise_covariance;
  // Problem-supplied noise when A(x) is unavailable: A(x) + nu is then
  // sample_map(x, z) and nu is noise_map(x, z).
  std::optional<SampleMap> noise_map;
  NoiseModel noise;

  // A(x). Throws MissingMeanMap when no mean map is attached.
  Vec mean(const Vec& x) const;
  // s_g(x), zero when g is absent.
  Vec g_selection(const Vec& x) const;
};

struct StochasticObjective {
  std::function<double(const Vec&, const Vec&)> sample_value;
  std::function<Vec(const Vec&, const Vec&)> sample_gradient;
  std::function<double(const Vec&)> mean_value;
  std::function<Vec(const Vec&)> mean_gradient;
  std::function<Mat(const Vec&)> mean_hessian;
};

enum class ConstraintKind { kInequality, kEquality };

struct Constraint {
  SmoothFunction function;
  ConstraintKind kind = ConstraintKind::kInequality;
  // Simple convex set equal to {function <= 0}, when there is one. Lets the
  // feasible set be projected onto without Newton solves.
  std::optional<SimpleSet> shape;
};

Constraint ball_constraint(const Vec& center, double radius);
Constraint halfspace_constraint(const Vec& normal, double offset);
std::vector<Constraint> box_constraints(const Vec& lo, const Vec& hi);

// min E f(x,z)  s.t.  g_i(x) <= 0 / = 0.
struct NLPProblem {
  std::string name;
  int dim = 0;
  StochasticObjective objective;
  std::vector<Constraint> constraints;
  SampleDraw draw;
  std::optional<Mat> gradient_noise_covariance;
  std::optional<Vec> solution_hint;
  ProjectionStrategy projection = ProjectionStrategy::kDykstra;

  // Feasible set as a ClosedSet (shapes when every constraint has one).
  ClosedSet feasible_set() const;
  Vec lagrangian_gradient(const Vec& x, const Vec& multipliers) const;
  Mat lagrangian_hessian(const Vec& x, const Vec& multipliers) const;
};

// A(x,z) = grad_x f(x,z), f_part = indicator of the feasible set, g = 0.
StochasticVIProblem nlp_to_vi(const NLPProblem& nlp);

struct TwoBallInstance {
  StochasticVIProblem problem;
  NLPProblem nlp;
  Manifold manifold;
  Vec solution;
};

// Linear objective -x3 + <z,x>, z ~ N(0, I_3), over the lens
// B_2(-1,0,0) ∩ B_2(1,0,0). Active manifold: the circle x1 = 0,
// x2^2 + x3^2 = 3; solution (0, 0, sqrt 3).
TwoBallInstance build_two_ball_instance();

// E |x - z|^2 / 2 with z ~ N(mu, I): the sample-mean problem.
NLPProblem build_quadratic_instance(const Vec& mu);

// <c, x> over [0,1]^d with deterministic gradient.
NLPProblem build_box_linear_instance(const Vec& c);

// M = {x : g_i(x) = 0, i in active}, projected by Gauss-Newton.
Manifold active_constraint_manifold(const NLPProblem& nlp, const std::vector<int>& active,
                                    double chart_radius = 1.0);

// Same problem with every draw replaced by the zero sample.
StochasticVIProblem with_zero_noise(StochasticVIProblem p);

struct NoiseSplit {
  Vec nu;   // A(x,z) - A(x)
  Vec nu1;  // A(x*,z) - A(x*)
  Vec nu2;  // nu - nu1
};

NoiseSplit evaluate_noise(const StochasticVIProblem& p, const Vec& x, const Vec& z);

}  // namespace svi
