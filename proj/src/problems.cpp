#include "svilab/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "svilab/error.hpp"

namespace svi {

Vec StochasticVIProblem::mean(const Vec& x) const {
  if (!mean_map) throw MissingMeanMap("problem '" + name + "' has no mean map A(x)");
  return (*mean_map)(x);
}

Vec StochasticVIProblem::g_selection(const Vec& x) const {
  if (!g_part) return Vec::Zero(x.size());
  return g_part->selection(x);
}

Constraint ball_constraint(const Vec& center, double radius) {
  const double r2 = radius * radius;
  const Eigen::Index d = center.size();
  SmoothFunction fn{
      [center, r2](const Vec& x) { return (x - center).squaredNorm() - r2; },
      [center](const Vec& x) -> Vec { return 2.0 * (x - center); },
      [d](const Vec&) -> Mat { return 2.0 * Mat::Identity(d, d); },
  };
  return {std::move(fn), ConstraintKind::kInequality, SimpleSet{Ball{center, radius}}};
}

Constraint halfspace_constraint(const Vec& normal, double offset) {
  const Eigen::Index d = normal.size();
  SmoothFunction fn{
      [normal, offset](const Vec& x) { return normal.dot(x) - offset; },
      [normal](const Vec&) -> Vec { return normal; },
      [d](const Vec&) -> Mat { return Mat::Zero(d, d); },
  };
  return {std::move(fn), ConstraintKind::kInequality, SimpleSet{Halfspace{normal, offset}}};
}

std::vector<Constraint> box_constraints(const Vec& lo, const Vec& hi) {
  std::vector<Constraint> out;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    const Vec e = Vec::Unit(lo.size(), i);
    out.push_back(halfspace_constraint(-e, -lo(i)));
    out.push_back(halfspace_constraint(e, hi(i)));
  }
  return out;
}

ClosedSet NLPProblem::feasible_set() const {
  bool all_shaped = true;
  for (const auto& c : constraints)
    all_shaped = all_shaped && c.shape.has_value() && c.kind == ConstraintKind::kInequality;
  if (all_shaped) {
    std::vector<SimpleSet> members;
    for (const auto& c : constraints) members.push_back(*c.shape);
    return ClosedSet::intersection(std::move(members), projection);
  }
  std::vector<SmoothFunction> fns;
  std::vector<bool> eq;
  for (const auto& c : constraints) {
    fns.push_back(c.function);
    eq.push_back(c.kind == ConstraintKind::kEquality);
  }
  return ClosedSet::sublevel(std::move(fns), std::move(eq));
}

Vec NLPProblem::lagrangian_gradient(const Vec& x, const Vec& multipliers) const {
  Vec g = objective.mean_gradient(x);
  for (std::size_t i = 0; i < constraints.size(); ++i)
    if (multipliers(static_cast<Eigen::Index>(i)) != 0.0)
      g += multipliers(static_cast<Eigen::Index>(i)) * constraints[i].function.gradient(x);
  return g;
}

Mat NLPProblem::lagrangian_hessian(const Vec& x, const Vec& multipliers) const {
  if (!objective.mean_hessian) throw std::invalid_argument("objective has no Hessian oracle");
  Mat h = objective.mean_hessian(x);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const double y = multipliers(static_cast<Eigen::Index>(i));
    if (y == 0.0) continue;
    if (!constraints[i].function.hessian)
      throw std::invalid_argument("constraint " + std::to_string(i) + " has no Hessian oracle");
    h += y * constraints[i].function.hessian(x);
  }
  return h;
}

StochasticVIProblem nlp_to_vi(const NLPProblem& nlp) {
  StochasticVIProblem p;
  p.name = nlp.name;
  p.dim = nlp.dim;
  p.sample_map = nlp.objective.sample_gradient;
  if (nlp.objective.mean_gradient) p.mean_map = nlp.objective.mean_gradient;
  p.draw = nlp.draw;
  p.f_part = nlp.constraints.empty() ? ProxFunction::zero()
                                     : ProxFunction::indicator(nlp.feasible_set());
  p.solution_hint = nlp.solution_hint;
  p.noise_covariance = nlp.gradient_noise_covariance;
  p.noise.decomposable = p.mean_map.has_value();
  return p;
}

TwoBallInstance build_two_ball_instance() {
  const double s3 = std::sqrt(3.0);
  Vec c(3);
  c << 0.0, 0.0, -1.0;
  Vec left(3), right(3);
  left << -1.0, 0.0, 0.0;
  right << 1.0, 0.0, 0.0;

  NLPProblem nlp;
  nlp.name = "two_ball";
  nlp.dim = 3;
  nlp.objective.sample_value = [c](const Vec& x, const Vec& z) { return c.dot(x) + z.dot(x); };
  nlp.objective.sample_gradient = [c](const Vec&, const Vec& z) -> Vec { return c + z; };
  nlp.objective.mean_value = [c](const Vec& x) { return c.dot(x); };
  nlp.objective.mean_gradient = [c](const Vec&) -> Vec { return c; };
  nlp.objective.mean_hessian = [](const Vec&) -> Mat { return Mat::Zero(3, 3); };
  nlp.constraints = {ball_constraint(left, 2.0), ball_constraint(right, 2.0)};
  nlp.draw = [](Sampler& s) { return s.normal_vec(3); };
  nlp.gradient_noise_covariance = Mat::Identity(3, 3);
  Vec sol(3);
  sol << 0.0, 0.0, s3;
  nlp.solution_hint = sol;
  nlp.projection = ProjectionStrategy::kExactPair;

  StochasticVIProblem vi = nlp_to_vi(nlp);
  vi.noise.fourth_moment_bound = [](const Vec&) { return 15.0; };  // E|z|^4 = d(d+2)

  Manifold m;
  m.ambient_dim = 3;
  m.codim = 2;
  const auto g1 = nlp.constraints[0].function;
  const auto g2 = nlp.constraints[1].function;
  m.defining_map = [g1, g2](const Vec& x) -> Vec {
    Vec r(2);
    r << g1.value(x), g2.value(x);
    return r;
  };
  m.jacobian = [g1, g2](const Vec& x) -> Mat {
    Mat j(2, 3);
    j.row(0) = g1.gradient(x).transpose();
    j.row(1) = g2.gradient(x).transpose();
    return j;
  };
  m.closed_form_projection = [s3](const Vec& x) -> Vec {
    Vec y(3);
    const double r = std::hypot(x(1), x(2));
    y << 0.0, s3 * x(1) / r, s3 * x(2) / r;
    return y;
  };
  m.chart_radius = 1.0;

  return {std::move(vi), std::move(nlp), std::move(m), sol};
}

NLPProblem build_quadratic_instance(const Vec& mu) {
  const Eigen::Index d = mu.size();
  NLPProblem nlp;
  nlp.name = "quadratic";
  nlp.dim = static_cast<int>(d);
  nlp.objective.sample_value = [](const Vec& x, const Vec& z) { return 0.5 * (x - z).squaredNorm(); };
  nlp.objective.sample_gradient = [](const Vec& x, const Vec& z) -> Vec { return x - z; };
  nlp.objective.mean_value = [mu, d](const Vec& x) {
    return 0.5 * (x - mu).squaredNorm() + 0.5 * static_cast<double>(d);
  };
  nlp.objective.mean_gradient = [mu](const Vec& x) -> Vec { return x - mu; };
  nlp.objective.mean_hessian = [d](const Vec&) -> Mat { return Mat::Identity(d, d); };
  nlp.draw = [mu](Sampler& s) -> Vec { return mu + s.normal_vec(mu.size()); };
  nlp.gradient_noise_covariance = Mat::Identity(d, d);
  nlp.solution_hint = mu;
  return nlp;
}

NLPProblem build_box_linear_instance(const Vec& c) {
  const Eigen::Index d = c.size();
  NLPProblem nlp;
  nlp.name = "box_linear";
  nlp.dim = static_cast<int>(d);
  nlp.objective.sample_value = [c](const Vec& x, const Vec&) { return c.dot(x); };
  nlp.objective.sample_gradient = [c](const Vec&, const Vec&) -> Vec { return c; };
  nlp.objective.mean_value = [c](const Vec& x) { return c.dot(x); };
  nlp.objective.mean_gradient = [c](const Vec&) -> Vec { return c; };
  nlp.objective.mean_hessian = [d](const Vec&) -> Mat { return Mat::Zero(d, d); };
  nlp.constraints = box_constraints(Vec::Zero(d), Vec::Ones(d));
  nlp.draw = [d](Sampler&) -> Vec { return Vec::Zero(d); };
  nlp.gradient_noise_covariance = Mat::Zero(d, d);
  // Minimizer: 1 where c < 0, 0 where c > 0.
  nlp.solution_hint = c.unaryExpr([](double v) { return v < 0.0 ? 1.0 : 0.0; });
  return nlp;
}

Manifold active_constraint_manifold(const NLPProblem& nlp, const std::vector<int>& active,
                                    double chart_radius) {
  std::vector<SmoothFunction> fns;
  for (int i : active) fns.push_back(nlp.constraints.at(static_cast<std::size_t>(i)).function);
  const int d = nlp.dim;
  Manifold m;
  m.ambient_dim = d;
  m.codim = static_cast<int>(fns.size());
  m.defining_map = [fns](const Vec& x) -> Vec {
    Vec r(static_cast<Eigen::Index>(fns.size()));
    for (std::size_t i = 0; i < fns.size(); ++i) r(static_cast<Eigen::Index>(i)) = fns[i].value(x);
    return r;
  };
  m.jacobian = [fns, d](const Vec& x) -> Mat {
    Mat j(static_cast<Eigen::Index>(fns.size()), d);
    for (std::size_t i = 0; i < fns.size(); ++i)
      j.row(static_cast<Eigen::Index>(i)) = fns[i].gradient(x).transpose();
    return j;
  };
  m.chart_radius = chart_radius;
  return m;
}

StochasticVIProblem with_zero_noise(StochasticVIProblem p) {
  const int d = p.dim;
  const SampleDraw original = p.draw;
  // Sample dimension may differ from the ambient one; probe it once.
  Sampler probe(0);
  const Eigen::Index zdim = original(probe).size();
  p.draw = [zdim](Sampler&) -> Vec { return Vec::Zero(zdim); };
  p.noise_covariance = Mat::Zero(d, d);
  p.name += "_noise_free";
  return p;
}

NoiseSplit evaluate_noise(const StochasticVIProblem& p, const Vec& x, const Vec& z) {
  if (!p.solution_hint) throw std::invalid_argument("evaluate_noise needs a solution hint");
  const Vec& xs = *p.solution_hint;
  NoiseSplit out;
  out.nu = p.sample_map(x, z) - p.mean(x);
  out.nu1 = p.sample_map(xs, z) - p.mean(xs);
  out.nu2 = out.nu - out.nu1;
  return out;
}

}  // namespace svi
