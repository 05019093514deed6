#pragma once

#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mflda/grid.hpp"

namespace mflda {

/// a * cos(2 pi (k x + l y) + theta)
struct PayoffTerm {
  double amplitude = 0.0;
  int k = 0;
  int l = 0;
  double phase = 0.0;
};

/// Finite trigonometric series on the product torus.
class Payoff {
 public:
  static constexpr int kMaxFrequency = 32;
  static constexpr std::size_t kProbePoints = 512;

  Payoff() = default;
  explicit Payoff(std::vector<PayoffTerm> terms);

  /// Parses {"terms":[{"a":..,"k":..,"l":..,"theta":..}, ...]}.
  static Payoff from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::span<const PayoffTerm> terms() const { return terms_; }
  bool is_zero() const;

  double operator()(double x, double y) const;
  double d2xx(double x, double y) const;
  double d2yy(double x, double y) const;

  /// max |f| on a probe grid; a lower bound for the true supremum.
  double sup_norm(std::size_t probe = kProbePoints) const;

  /// lambda' = min(min f_xx, min -f_yy) over the probe grid.
  double convexity_constant(std::size_t probe = kProbePoints) const;

 private:
  std::vector<PayoffTerm> terms_;
};

/// Real trigonometric series sum_m Re[c_m exp(2 pi i k_m x)].
///
/// Induced potentials of a trigonometric payoff are exactly of this form,
/// so they can be evaluated off-grid and differentiated analytically.
class TrigSeries {
 public:
  using Mode = std::pair<int, std::complex<double>>;

  TrigSeries() = default;
  explicit TrigSeries(std::vector<Mode> modes) : modes_(std::move(modes)) {}

  std::span<const Mode> modes() const { return modes_; }

  double operator()(double x) const { return derivative(x, 0); }
  double derivative(double x, int order) const;
  GridFunction sample(const PeriodicGrid& grid, int order = 0) const;

 private:
  std::vector<Mode> modes_;
};

/// Fourier moment int exp(2 pi i freq y) rho(y) dy by quadrature.
std::complex<double> fourier_moment(const Density& rho, int freq);
/// Same moment of an empirical measure.
std::complex<double> fourier_moment(std::span<const double> samples, int freq);

/// V_nu(x) = int f(x, y) dnu(y) from the Fourier moments of nu.
TrigSeries potential_x(const Payoff& f, const Density& nu);
TrigSeries potential_x(const Payoff& f, std::span<const double> nu_samples);
/// U_mu(y) = int f(x, y) dmu(x).
TrigSeries potential_y(const Payoff& f, const Density& mu);
TrigSeries potential_y(const Payoff& f, std::span<const double> mu_samples);

/// Potentials from an arbitrary moment source freq -> int exp(2 pi i freq y) drho.
using MomentFn = std::function<std::complex<double>(int)>;
TrigSeries potential_x_from_moments(const Payoff& f, const MomentFn& nu_moment);
TrigSeries potential_y_from_moments(const Payoff& f, const MomentFn& mu_moment);

struct InducedPotentials {
  GridFunction V;  // on the grid of mu
  GridFunction U;  // on the grid of nu
};

/// Grid values of V_nu and U_mu. Each term separates into a product of a
/// trigonometric factor and one quadrature, so no double loop is needed.
InducedPotentials induced_potentials(const Payoff& f, const Density& mu, const Density& nu);

}  // namespace mflda
