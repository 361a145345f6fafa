#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "svilab/linalg.hpp"
#include "svilab/random.hpp"

namespace svi::oracle {

inline Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

inline bool in_lens(const Vec& y) {
  return (y - v3(-1, 0, 0)).norm() <= 2.0 && (y - v3(1, 0, 0)).norm() <= 2.0;
}

// Grid oracle for the lens projection. Outside the lens the nearest point
// lies on one of the two spherical caps {c + 2 (s cos phi, sin phi cos t,
// sin phi sin t)}, phi in [0, pi/3]; each cap is searched on a refining
// (phi, t) grid, where the squared distance is smooth.
inline Vec lens_grid_oracle(const Vec& x) {
  if (in_lens(x)) return x;
  Vec best;
  double best_d = std::numeric_limits<double>::infinity();
  for (double side : {-1.0, 1.0}) {
    const Vec c = v3(side, 0, 0);
    auto point = [&](double phi, double t) {
      return Vec(c + 2.0 * v3(-side * std::cos(phi), std::sin(phi) * std::cos(t), std::sin(phi) * std::sin(t)));
    };
    double phi0 = 0.0, t0 = 0.0, dphi = M_PI / 3.0 / 60.0, dt = 2.0 * M_PI / 120.0;
    int nphi = 60, nt = 60;
    double cap_best = std::numeric_limits<double>::infinity();
    Vec cap_point;
    while (dphi > 1e-11) {
      double bp = phi0, bt = t0;
      for (int i = -nphi; i <= nphi; ++i) {
        const double phi = std::clamp(phi0 + i * dphi, 0.0, M_PI / 3.0);
        for (int j = -nt; j <= nt; ++j) {
          const double t = t0 + j * dt;
          const double d = (point(phi, t) - x).norm();
          if (d < cap_best) {
            cap_best = d;
            cap_point = point(phi, t);
            bp = phi;
            bt = t;
          }
        }
      }
      phi0 = bp;
      t0 = bt;
      dphi *= 0.2;
      dt *= 0.2;
      nphi = nt = 10;
    }
    if (cap_best < best_d) {
      best_d = cap_best;
      best = cap_point;
    }
  }
  return best;
}

inline Mat random_matrix(Sampler& s, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = s.normal();
  return m;
}

inline double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Central differences of a vector field.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  const Vec f0 = f(x);
  Mat j(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    j.col(i) = (f(x + e) - f(x - e)) / (2.0 * h);
  }
  return j;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    g(i) = (f(x + e) - f(x - e)) / (2.0 * h);
  }
  return g;
}

}  // namespace svi::oracle
