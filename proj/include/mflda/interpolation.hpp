#pragma once

#include <span>
#include <vector>

namespace mflda {

/// Piecewise cubic Hermite interpolant of nondecreasing data.
///
/// Supplied slopes are limited with the Fritsch-Carlson rule so the
/// interpolant is monotone on every cell. Evaluation outside [x_0, x_last]
/// is clamped to the end cells.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;

  /// Smallest x with value(x) == y, for y inside the data range.
  double inverse(double y) const;

  std::span<const double> knots() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  std::size_t cell_of(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

/// CDF of the periodic piecewise-linear profile through (j/n, values_j) on
/// [0, 1], normalized to end at 1.
///
/// This is the monotone cubic Hermite spline of the trapezoid CDF with slopes
/// values_j: for nonnegative slopes the Hermite data are always inside the
/// Fritsch-Carlson region and the cubic term vanishes, leaving a quadratic per
/// cell that can be inverted in closed form.
class PiecewiseLinearCdf {
 public:
  explicit PiecewiseLinearCdf(std::span<const double> values);

  /// Quantile for r in [0, 1]. `cell` is a search hint, updated in place;
  /// monotone sweeps cost O(1) per call.
  double quantile(double r, std::size_t& cell) const;
  double quantile(double r) const;

  /// CDF values at the nodes 0, h, ..., 1 (first 0, last 1).
  std::span<const double> knots() const { return cdf_; }

 private:
  std::size_t n_;
  double h_;
  std::vector<double> rho_;
  std::vector<double> cdf_;
};

}  // namespace mflda
