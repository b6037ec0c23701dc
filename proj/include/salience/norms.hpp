#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace salience {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_infinite_norm(double p) { return std::isinf(p); }

/// ||x||_p for p >= 1, with p = +inf giving the max norm.
inline double lp_norm(const Vector& x, double p) {
  if (x.size() == 0) return 0.0;
  if (is_infinite_norm(p)) return x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  // Scale by the largest entry so the p-th powers cannot overflow.
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) sum += std::pow(std::abs(x[k]) / scale, p);
  return scale * std::pow(sum, 1.0 / p);
}

/// Sum of |x_k|^p, the smooth surrogate sharing minimizers with ||x||_p.
inline double lp_power_sum(const Vector& x, double p) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) sum += std::pow(std::abs(x[k]), p);
  return sum;
}

/// Hoelder conjugate q with 1/p + 1/q = 1.
inline double conjugate_exponent(double p) {
  if (p == 1.0) return kInfinity;
  if (is_infinite_norm(p)) return 1.0;
  return p / (p - 1.0);
}

}  // namespace salience
