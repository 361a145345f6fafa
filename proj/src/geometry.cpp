#include "svilab/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "svilab/error.hpp"

namespace svi {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec project_ball(const Vec& x, const Ball& b) {
  const Vec d = x - b.center;
  const double n = d.norm();
  if (n <= b.radius) return x;
  return b.center + (b.radius / n) * d;
}

Vec project_box(const Vec& x, const Box& b) { return x.cwiseMax(b.lo).cwiseMin(b.hi); }

Vec project_halfspace(const Vec& x, const Halfspace& h) {
  const double excess = h.normal.dot(x) - h.offset;
  if (excess <= 0.0) return x;
  return x - (excess / h.normal.squaredNorm()) * h.normal;
}

Vec project_simple(const Vec& x, const SimpleSet& s) {
  return std::visit(Overloaded{[&](const Ball& b) { return project_ball(x, b); },
                               [&](const Box& b) { return project_box(x, b); },
                               [&](const Halfspace& h) { return project_halfspace(x, h); }},
                    s);
}

double violation_simple(const Vec& x, const SimpleSet& s) {
  return std::visit(
      Overloaded{[&](const Ball& b) { return std::max(0.0, (x - b.center).norm() - b.radius); },
                 [&](const Box& b) {
                   return std::max(0.0, std::max((b.lo - x).maxCoeff(), (x - b.hi).maxCoeff()));
                 },
                 [&](const Halfspace& h) {
                   return std::max(0.0, (h.normal.dot(x) - h.offset) / h.normal.norm());
                 }},
      s);
}

double violation_constraint(const Vec& x, const SmoothFunction& g, bool equality) {
  const double v = g.value(x);
  return equality ? std::abs(v) : std::max(0.0, v);
}

// Dykstra's alternating projections over m closed convex sets.
template <class Project, class Violation>
Vec dykstra(const Vec& x0, std::size_t m, const Project& project, const Violation& violation,
            const DykstraOptions& opts) {
  Vec x = x0;
  std::vector<Vec> increments(m, Vec::Zero(x0.size()));
  double move = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const Vec start = x;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec shifted = x + increments[i];
      x = project(i, shifted);
      increments[i] = shifted - x;
    }
    move = (x - start).norm();
    if (move < opts.step_tol && violation(x) <= kMembershipTol) return x;
  }
  throw NoConvergence("Dykstra projection did not converge", std::max(move, violation(x)));
}

// Nearest point of the circle where two spheres meet.
Vec project_sphere_pair_circle(const Vec& x, const Ball& a, const Ball& b) {
  const Vec axis_full = b.center - a.center;
  const double d = axis_full.norm();
  const Vec axis = axis_full / d;
  const double along = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
  const double rho = std::sqrt(std::max(0.0, a.radius * a.radius - along * along));
  const Vec mid = a.center + along * axis;
  Vec q = (x - mid) - (x - mid).dot(axis) * axis;
  double qn = q.norm();
  if (qn < 1e-300) {
    // x on the axis: every circle point is nearest; pick a fixed one.
    Eigen::Index k;
    axis.cwiseAbs().minCoeff(&k);
    q = Vec::Unit(x.size(), k);
    q -= q.dot(axis) * axis;
    qn = q.norm();
  }
  return mid + (rho / qn) * q;
}

bool in_ball(const Vec& x, const Ball& b) {
  return (x - b.center).norm() <= b.radius * (1.0 + 1e-14);
}

Vec project_two_balls(const Vec& x, const Ball& a, const Ball& b) {
  const bool in_a = in_ball(x, a);
  const bool in_b = in_ball(x, b);
  if (in_a && in_b) return x;
  if (!in_a) {
    Vec pa = project_ball(x, a);
    if (in_ball(pa, b)) return pa;
  }
  if (!in_b) {
    Vec pb = project_ball(x, b);
    if (in_ball(pb, a)) return pb;
  }
  return project_sphere_pair_circle(x, a, b);
}

}  // namespace

ClosedSet ClosedSet::ball(Vec center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  return ClosedSet(Ball{std::move(center), radius});
}

ClosedSet ClosedSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
    throw std::invalid_argument("box requires lo <= hi");
  return ClosedSet(Box{std::move(lo), std::move(hi)});
}

ClosedSet ClosedSet::halfspace(Vec normal, double offset) {
  if (normal.norm() == 0.0) throw std::invalid_argument("halfspace normal must be nonzero");
  return ClosedSet(Halfspace{std::move(normal), offset});
}

ClosedSet ClosedSet::intersection(std::vector<SimpleSet> members, ProjectionStrategy strategy) {
  if (members.empty()) throw std::invalid_argument("intersection needs at least one member");
  if (strategy == ProjectionStrategy::kExactPair) {
    if (members.size() != 2 || !std::holds_alternative<Ball>(members[0]) ||
        !std::holds_alternative<Ball>(members[1]))
      throw std::invalid_argument("exact-pair projection supports exactly two balls");
  }
  return ClosedSet(Intersection{std::move(members)}, strategy);
}

ClosedSet ClosedSet::sublevel(std::vector<SmoothFunction> constraints, std::vector<bool> is_equality) {
  if (constraints.size() != is_equality.size())
    throw std::invalid_argument("sublevel: one kind flag per constraint");
  if (constraints.empty()) throw std::invalid_argument("sublevel needs at least one constraint");
  return ClosedSet(Sublevel{std::move(constraints), std::move(is_equality)});
}

Vec ClosedSet::project(const Vec& x) const {
  return std::visit(
      Overloaded{
          [&](const Ball& b) { return project_ball(x, b); },
          [&](const Box& b) { return project_box(x, b); },
          [&](const Halfspace& h) { return project_halfspace(x, h); },
          [&](const Intersection& in) {
            if (in.members.size() == 1) return project_simple(x, in.members[0]);
            if (strategy_ == ProjectionStrategy::kExactPair)
              return project_two_balls(x, std::get<Ball>(in.members[0]),
                                       std::get<Ball>(in.members[1]));
            return dykstra(
                x, in.members.size(),
                [&](std::size_t i, const Vec& p) { return project_simple(p, in.members[i]); },
                [&](const Vec& p) { return violation(p); }, dykstra_);
          },
          [&](const Sublevel& s) {
            if (s.constraints.size() == 1)
              return project_onto_constraint(x, s.constraints[0], s.is_equality[0]);
            return dykstra(
                x, s.constraints.size(),
                [&](std::size_t i, const Vec& p) {
                  return project_onto_constraint(p, s.constraints[i], s.is_equality[i]);
                },
                [&](const Vec& p) { return violation(p); }, dykstra_);
          }},
      kind_);
}

double ClosedSet::violation(const Vec& x) const {
  return std::visit(Overloaded{[&](const Ball& b) { return violation_simple(x, b); },
                               [&](const Box& b) { return violation_simple(x, b); },
                               [&](const Halfspace& h) { return violation_simple(x, h); },
                               [&](const Intersection& in) {
                                 double v = 0.0;
                                 for (const auto& m : in.members) v = std::max(v, violation_simple(x, m));
                                 return v;
                               },
                               [&](const Sublevel& s) {
                                 double v = 0.0;
                                 for (std::size_t i = 0; i < s.constraints.size(); ++i)
                                   v = std::max(v, violation_constraint(x, s.constraints[i],
                                                                        s.is_equality[i]));
                                 return v;
                               }},
                    kind_);
}

Vec project_set(const Vec& x, const ClosedSet& s) { return s.project(x); }

Vec project_onto_constraint(const Vec& x, const SmoothFunction& g, bool equality) {
  if (!equality && g.value(x) <= 0.0) return x;
  const Eigen::Index d = x.size();
  Vec y = x;
  double lambda = 0.0;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const Vec grad = g.gradient(y);
    const double gv = g.value(y);
    const Vec r1 = y - x + lambda * grad;
    res = std::hypot(r1.norm(), gv);
    if (res <= 1e-13) break;
    Mat kkt = Mat::Zero(d + 1, d + 1);
    kkt.topLeftCorner(d, d).setIdentity();
    if (g.hessian) kkt.topLeftCorner(d, d) += lambda * g.hessian(y);
    kkt.topRightCorner(d, 1) = grad;
    kkt.bottomLeftCorner(1, d) = grad.transpose();
    Vec rhs(d + 1);
    rhs << -r1, -gv;
    const Vec step = kkt.fullPivLu().solve(rhs);
    y += step.head(d);
    lambda += step(d);
  }
  if (res > 1e-10) throw NoConvergence("constraint projection did not converge", res);
  if (!equality && lambda < -1e-10)
    throw NoConvergence("constraint projection reached a negative multiplier", -lambda);
  return y;
}

double ProxFunction::value(const Vec& x) const {
  return std::visit(Overloaded{[](const ZeroFunction&) { return 0.0; },
                               [&](const Indicator& ind) {
                                 return ind.set.contains(x) ? 0.0
                                                            : std::numeric_limits<double>::infinity();
                               },
                               [&](const OneNorm& n) { return n.weight * x.lpNorm<1>(); },
                               [&](const CustomProx& c) { return c.value(x); }},
                    kind_);
}

Vec prox(const ProxFunction& f, double alpha, const Vec& x) {
  if (!(alpha > 0.0)) throw std::invalid_argument("prox requires alpha > 0");
  return std::visit(Overloaded{[&](const ZeroFunction&) -> Vec { return x; },
                               [&](const Indicator& ind) -> Vec { return ind.set.project(x); },
                               [&](const OneNorm& n) -> Vec {
                                 const double t = alpha * n.weight;
                                 return x.unaryExpr([t](double v) {
                                   return std::copysign(std::max(0.0, std::abs(v) - t), v);
                                 });
                               },
                               [&](const CustomProx& c) -> Vec { return c.prox(alpha, x); }},
                    f.kind());
}

Mat tangent_projector(const Mat& jac) {
  const Eigen::Index d = jac.cols();
  const Eigen::Index n = jac.rows();
  if (n == 0) return Mat::Identity(d, d);
  if (n > d) throw RankDeficient("more defining equations than ambient dimensions");
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(n - 1) <= kRankRatio * sv(0))
    throw RankDeficient("Jacobian is rank deficient (smallest singular value " +
                        std::to_string(sv(n - 1)) + ")");
  const Mat vn = svd.matrixV().leftCols(n);
  Mat p = Mat::Identity(d, d) - vn * vn.transpose();
  return 0.5 * (p + p.transpose());
}

Mat tangent_projector_at(const Manifold& m, const Vec& y) { return tangent_projector(m.jacobian(y)); }

namespace {

// Minimum-norm solution of J s = r for full-row-rank J.
Vec min_norm_solve(const Mat& jac, const Vec& r) {
  const Mat gram = jac * jac.transpose();
  return jac.transpose() * gram.ldlt().solve(r);
}

void check_chart(const Vec& x, const Vec& y, const Manifold& m) {
  if (!y.allFinite() || (y - x).norm() > m.chart_radius)
    throw OutOfChart("point lies outside the manifold projection neighborhood");
}

}  // namespace

Vec project_manifold(const Vec& x, const Manifold& m, const ManifoldProjectionOptions& opts) {
  if (m.codim == 0) return x;
  if (m.closed_form_projection && !opts.force_iterative) {
    Vec y = (*m.closed_form_projection)(x);
    check_chart(x, y, m);
    return y;
  }

  // Gauss-Newton retraction onto G = 0.
  Vec y = x;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Vec r = m.defining_map(y);
    if (r.norm() <= opts.tol) break;
    y -= min_norm_solve(m.jacobian(y), r);
    if (!y.allFinite()) break;
  }
  if (!y.allFinite()) throw OutOfChart("manifold retraction left the chart");
  if (it == opts.max_iter)
    throw NoConvergence("manifold retraction did not converge", m.defining_map(y).norm());

  // Gauss-Newton on  y - x + J(y)^T lambda = 0,  G(y) = 0.
  Mat jac = m.jacobian(y);
  Mat gram = jac * jac.transpose();
  Vec lambda = gram.ldlt().solve(jac * (x - y));
  double res = std::numeric_limits<double>::infinity();
  for (it = 0; it < opts.max_iter; ++it) {
    const Vec r1 = y - x + jac.transpose() * lambda;
    const Vec r2 = m.defining_map(y);
    res = std::max(r1.norm(), r2.norm());
    if (res <= opts.tol) {
      check_chart(x, y, m);
      return y;
    }
    const Vec dlambda = gram.ldlt().solve(r2 - jac * r1);
    y += -r1 - jac.transpose() * dlambda;
    lambda += dlambda;
    if (!y.allFinite()) throw OutOfChart("manifold projection left the chart");
    jac = m.jacobian(y);
    gram = jac * jac.transpose();
  }
  throw NoConvergence("manifold projection did not converge", res);
}

double distance_to_manifold(const Vec& x, const Manifold& m) {
  return (x - project_manifold(x, m)).norm();
}

Mat range_basis(const Mat& projector) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (projector + projector.transpose()));
  const auto& vals = eig.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = vals.size() - 1; i >= 0; --i)
    if (vals(i) > 0.5) keep.push_back(i);
  Mat u(projector.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    Vec col = eig.eigenvectors().col(keep[j]);
    Eigen::Index k;
    col.cwiseAbs().maxCoeff(&k);
    if (col(k) < 0) col = -col;
    u.col(static_cast<Eigen::Index>(j)) = col;
  }
  return u;
}

Mat pinv_on_subspace(const Mat& m, const Mat& p_t, double min_eig) {
  const Eigen::Index d = p_t.rows();
  if (p_t.cols() != d || m.rows() != d || m.cols() != d)
    throw std::invalid_argument("pinv_on_subspace: dimension mismatch");
  if ((p_t * p_t - p_t).norm() > 1e-8 || (p_t - p_t.transpose()).norm() > 1e-8)
    throw std::invalid_argument("pinv_on_subspace: projector must be symmetric idempotent");
  const Mat u = range_basis(p_t);
  if (u.cols() == 0) return Mat::Zero(d, d);
  const Mat restricted = u.transpose() * m * u;
  const Mat sym = 0.5 * (restricted + restricted.transpose());
  const double smallest = Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues()(0);
  if (smallest < min_eig)
    throw SingularOnTangent("restriction to the tangent space is singular (smallest eigenvalue " +
                            std::to_string(smallest) + ")");
  return u * restricted.partialPivLu().inverse() * u.transpose();
}

}  // namespace svi
