#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "svilab/linalg.hpp"

namespace svi {

// ---------------------------------------------------------------------------
// Smooth scalar functions (constraints, objectives). Hessian may be absent
// when only first-order information is needed.
// ---------------------------------------------------------------------------
struct SmoothFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

// ---------------------------------------------------------------------------
// Closed sets with Euclidean projections.
// ---------------------------------------------------------------------------
struct Ball {
  Vec center;
  double radius = 1.0;
};

struct Box {
  Vec lo;
  Vec hi;
};

// {x : <normal, x> <= offset}
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

using SimpleSet = std::variant<Ball, Box, Halfspace>;

struct Intersection {
  std::vector<SimpleSet> members;
};

// {x : g_i(x) <= 0 (inequality) or g_i(x) = 0 (equality)} for smooth convex
// g_i (equalities affine). Each constraint is projected onto by a Newton
// solve on its own KKT system; the pieces are combined by Dykstra.
struct Sublevel {
  std::vector<SmoothFunction> constraints;
  std::vector<bool> is_equality;
};

enum class ProjectionStrategy {
  kDykstra,    // alternating projections, valid for convex intersections
  kExactPair,  // active-set enumeration, two balls only
};

struct DykstraOptions {
  int max_sweeps = 10000;
  double step_tol = 1e-12;
};

class ClosedSet {
 public:
  using Kind = std::variant<Ball, Box, Halfspace, Intersection, Sublevel>;

  static ClosedSet ball(Vec center, double radius);
  static ClosedSet box(Vec lo, Vec hi);
  static ClosedSet halfspace(Vec normal, double offset);
  static ClosedSet intersection(std::vector<SimpleSet> members,
                                ProjectionStrategy strategy = ProjectionStrategy::kDykstra);
  static ClosedSet sublevel(std::vector<SmoothFunction> constraints,
                            std::vector<bool> is_equality);

  const Kind& kind() const { return kind_; }
  ProjectionStrategy strategy() const { return strategy_; }
  const DykstraOptions& dykstra_options() const { return dykstra_; }
  ClosedSet& set_dykstra_options(DykstraOptions opts) {
    dykstra_ = opts;
    return *this;
  }

  // Nearest point of the set. Throws NoConvergence for iterative strategies.
  Vec project(const Vec& x) const;

  // Largest constraint violation at x (zero inside the set).
  double violation(const Vec& x) const;
  bool contains(const Vec& x, double tol = kMembershipTol) const { return violation(x) <= tol; }

 private:
  explicit ClosedSet(Kind kind, ProjectionStrategy strategy = ProjectionStrategy::kDykstra)
      : kind_(std::move(kind)), strategy_(strategy) {}

  Kind kind_;
  ProjectionStrategy strategy_;
  DykstraOptions dykstra_;
};

Vec project_set(const Vec& x, const ClosedSet& s);

// Projection onto a single smooth constraint set {g <= 0} (or {g = 0}).
Vec project_onto_constraint(const Vec& x, const SmoothFunction& g, bool equality);

// ---------------------------------------------------------------------------
// Proximable functions.
// ---------------------------------------------------------------------------
struct ZeroFunction {};

struct Indicator {
  ClosedSet set;
};

struct OneNorm {
  double weight = 1.0;
};

struct CustomProx {
  std::function<double(const Vec&)> value;
  std::function<Vec(double alpha, const Vec&)> prox;
};

class ProxFunction {
 public:
  using Kind = std::variant<ZeroFunction, Indicator, OneNorm, CustomProx>;

  ProxFunction() : kind_(ZeroFunction{}) {}
  static ProxFunction zero() { return ProxFunction(ZeroFunction{}); }
  static ProxFunction indicator(ClosedSet s) { return ProxFunction(Indicator{std::move(s)}); }
  static ProxFunction one_norm(double weight) { return ProxFunction(OneNorm{weight}); }
  static ProxFunction custom(CustomProx c) { return ProxFunction(std::move(c)); }

  const Kind& kind() const { return kind_; }
  bool is_zero() const { return std::holds_alternative<ZeroFunction>(kind_); }
  const ClosedSet* indicator_set() const {
    auto* ind = std::get_if<Indicator>(&kind_);
    return ind ? &ind->set : nullptr;
  }

  // +infinity outside the domain.
  double value(const Vec& x) const;

 private:
  explicit ProxFunction(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// argmin_y f(y) + |y - x|^2 / (2 alpha). Requires alpha > 0.
Vec prox(const ProxFunction& f, double alpha, const Vec& x);

// ---------------------------------------------------------------------------
// Embedded manifolds given by local defining equations G(x) = 0.
// ---------------------------------------------------------------------------
struct Manifold {
  std::function<Vec(const Vec&)> defining_map;
  std::function<Mat(const Vec&)> jacobian;
  std::optional<std::function<Vec(const Vec&)>> closed_form_projection;
  int ambient_dim = 0;
  int codim = 0;
  // Points farther than this from their projection are outside the chart.
  double chart_radius = 1.0;
};

struct ManifoldProjectionOptions {
  double tol = 1e-10;
  int max_iter = 100;
  // Skip the closed form even when one is attached (oracle comparisons).
  bool force_iterative = false;
};

// P_T = I - J^T (J J^T)^{-1} J. Throws RankDeficient when J loses row rank.
Mat tangent_projector(const Mat& jac);

Mat tangent_projector_at(const Manifold& m, const Vec& y);

Vec project_manifold(const Vec& x, const Manifold& m, const ManifoldProjectionOptions& opts = {});

double distance_to_manifold(const Vec& x, const Manifold& m);

// Orthonormal basis of range(P) for a symmetric idempotent P. Columns are
// sign-normalized so the entry of largest magnitude is positive.
Mat range_basis(const Mat& projector);

// (P_T M P_T)^+ computed on range(P_T). Throws SingularOnTangent when the
// symmetric part of M restricted to range(P_T) has an eigenvalue below
// `min_eig`.
Mat pinv_on_subspace(const Mat& m, const Mat& p_t, double min_eig = 1e-10);

}  // namespace svi
