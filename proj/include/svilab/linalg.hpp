#pragma once

#include <Eigen/Dense>

namespace svi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Absolute tolerance for every "lies on the set / manifold" predicate.
inline constexpr double kMembershipTol = 1e-10;

// Singular-value ratio below which a matrix is treated as rank deficient.
inline constexpr double kRankRatio = 1e-10;

}  // namespace svi
