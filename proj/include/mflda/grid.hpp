#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflda {

// Base of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A density value fell below the clipping tolerance.
class NegativeDensity : public Error {
 public:
  NegativeDensity(std::size_t index, double value);
  std::size_t index;
  double value;
};

class JacobianDegenerate : public Error {
 public:
  JacobianDegenerate(double min_jacobian, double t);
  double min_jacobian;
  double t;
};

/// Uniform discretization of the unit circle R/Z with nodes x_j = j/N.
class PeriodicGrid {
 public:
  static constexpr std::size_t kMinPoints = 8;

  explicit PeriodicGrid(std::size_t n_points);

  std::size_t size() const { return n_; }
  double spacing() const { return 1.0 / static_cast<double>(n_); }
  double node(std::size_t j) const {
    return static_cast<double>(j) / static_cast<double>(n_);
  }
  std::vector<double> nodes() const;

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

 private:
  std::size_t n_;
};

/// Real values on the nodes of a periodic grid.
class GridFunction {
 public:
  GridFunction(PeriodicGrid grid, std::vector<double> values);
  explicit GridFunction(PeriodicGrid grid, double fill = 0.0);

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }

  double max_abs() const;

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
};

/// Nonnegative grid function with h * sum(values) == 1.
///
/// Construction applies the clipping policy: values in [-1e-12, 0) become 0,
/// anything lower throws NegativeDensity. The result is always renormalized.
class Density {
 public:
  static constexpr double kClipTolerance = 1e-12;

  Density(PeriodicGrid grid, std::vector<double> values);

  static Density uniform(PeriodicGrid grid);

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }

  double mass() const;
  double min() const;
  double max() const;

  GridFunction as_function() const { return GridFunction(grid_, values_); }

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
};

// Rectangle rule h * sum_j g_j.
double quadrature(std::span<const double> values);
double quadrature(const GridFunction& g);
double quadrature(const Density& rho);

// Quadrature of a pointwise product.
double quadrature(std::span<const double> a, std::span<const double> b);

/// log(h * sum_j exp(w_j)) evaluated with a max shift.
double log_integral_exp(std::span<const double> w);

enum class DiffScheme { Spectral, CentralDifference };

/// Derivative of a periodic grid function.
///
/// Spectral: Fourier coefficient k is multiplied by (2 pi i k)^order and the
/// Nyquist mode is dropped for odd orders. CentralDifference is the
/// second-order fallback with the same signature.
GridFunction spectral_derivative(const GridFunction& g, int order,
                                 DiffScheme scheme = DiffScheme::Spectral);

/// Trigonometric interpolation of grid samples onto a grid with more points.
std::vector<double> fourier_refine(std::span<const double> values, std::size_t n_fine);

/// Cumulative distribution of a smooth density at the nodes, F(x_0) = 0,
/// obtained by integrating its Fourier series term by term.
std::vector<double> spectral_cdf(const Density& rho);

struct PushforwardResult {
  Density density;
  // Mass before renormalization; within 1e-8 of 1 for a valid transport.
  double renormalization;
};

/// Density of (id + t * phi')_# rho resampled on the grid of rho.
///
/// The transported CDF (values F(x_j) at nodes x_j + t phi'(x_j), slopes
/// rho_j / (1 + t phi''(x_j))) is interpolated by a monotone cubic Hermite
/// spline and differentiated at the grid nodes.
PushforwardResult pushforward_1d(const Density& rho, const GridFunction& phi, double t,
                                 double min_jacobian = 1e-6);

}  // namespace mflda
