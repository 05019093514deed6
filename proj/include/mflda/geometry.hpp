#pragma once

#include <cstddef>

#include <json.hpp>

#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace mflda {

class SupportMismatch : public Error {
 public:
  explicit SupportMismatch(std::size_t index);
  std::size_t index;
};

class GridTooLarge : public Error {
 public:
  GridTooLarge(std::size_t n, std::size_t limit);
};

/// One row of the metric stack evaluated against a reference pair.
struct MetricSample {
  double t = 0.0;
  double w2_mu = 0.0;
  double w2_nu = 0.0;
  double kl_mu = 0.0;
  double kl_nu = 0.0;
  double ni = 0.0;
  double f_value = 0.0;
  double mass_mu = 1.0;
  double mass_nu = 1.0;
  double min_mu = 0.0;
  double min_nu = 0.0;

  /// Lyapunov energy W2^2(mu, mu*) + W2^2(nu, nu*).
  double energy() const { return w2_mu * w2_mu + w2_nu * w2_nu; }
};

/// A variation potential phi, normalized to zero mean, with its first two
/// spectral derivatives.
class VariationDirection {
 public:
  explicit VariationDirection(const GridFunction& phi);

  const GridFunction& phi() const { return phi_; }
  const GridFunction& d1() const { return d1_; }
  const GridFunction& d2() const { return d2_; }

  /// Largest |t| keeping 1 + t phi'' >= margin.
  double max_step(double margin = 1e-6) const;

 private:
  GridFunction phi_;
  GridFunction d1_;
  GridFunction d2_;
};

/// H(rho) = int rho log rho, with 0 log 0 = 0.
double entropy(const Density& rho);

/// KL(rho || pi); throws SupportMismatch if pi vanishes where rho does not.
double kl(const Density& rho, const Density& pi);

/// F(mu, nu) = int V_nu dmu + H(mu) - H(nu).
double saddle_value(const Payoff& f, const Density& mu, const Density& nu);

/// Nikaido-Isoda error from the closed form
///   H(mu) + H(nu) + log int e^{U_mu} + log int e^{-V_nu}.
/// Rounding-level negatives (>= -1e-10) are clamped to zero.
double ni_error(const Payoff& f, const Density& mu, const Density& nu);

/// W2 on the circle by the circular quantile method.
///
/// Both grid densities are read as piecewise-linear profiles; their CDFs are
/// monotone cubic Hermite splines. The cut parameter theta of
///   int_0^1 |Q_rho(q) - Q_sigma(q + theta)|^2 dq
/// (Q_sigma extended by Q(q + 1) = Q(q) + 1) is found by ternary search.
double w2_circle(const Density& rho, const Density& sigma);

/// Exact discrete optimal transport between the two grid measures (atoms
/// h rho_j at x_j) with squared geodesic cost on the circle. N <= 128.
double w2_oracle(const Density& rho, const Density& sigma);

struct FirstVariationReport {
  double analytic = 0.0;
  double finite_difference = 0.0;
  double gap = 0.0;
  double step = 0.0;
};

struct SecondVariationReport {
  double value = 0.0;  // quadrature((phi''^2 + V'' phi'^2) mu)
  double finite_difference = 0.0;
  double gap = 0.0;
  double step = 0.0;
};

/// G(t) = H(mu_t) + int V dmu_t along mu_t = (id + t phi')_# mu, evaluated by
/// exact change of variables (no resampling). V is the potential induced by
/// nu_fixed.
double variation_curve(const Payoff& f, const Density& mu, const Density& nu_fixed,
                       const VariationDirection& dir, double t);

FirstVariationReport first_variation_check(const Payoff& f, const Density& mu,
                                           const Density& nu_fixed,
                                           const VariationDirection& dir, double step = 1e-2);

SecondVariationReport second_variation(const Payoff& f, const Density& mu,
                                       const Density& nu_fixed, const VariationDirection& dir,
                                       double step = 1e-2);

/// Second-variation quadratic form for a generic potential V on the grid of mu:
/// quadrature((phi''^2 + V'' phi'^2) mu).
double second_variation_form(const Density& mu, const GridFunction& V,
                             const VariationDirection& dir);

/// Full metric sample of (mu, nu) against a reference pair.
MetricSample evaluate_metrics(const Payoff& f, const Density& mu, const Density& nu,
                              const Density& mu_ref, const Density& nu_ref, double t);

nlohmann::json to_json(const MetricSample& s);

}  // namespace mflda
