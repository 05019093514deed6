#include "mflda/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mflda {

SupportMismatch::SupportMismatch(std::size_t index_)
    : Error("KL reference density vanishes at node " + std::to_string(index_) +
            " where the first density is positive"),
      index(index_) {}

VariationDirection::VariationDirection(const GridFunction& phi)
    : phi_(phi), d1_(phi.grid()), d2_(phi.grid()) {
  const double mean = quadrature(phi_);
  for (double& v : phi_.values()) v -= mean;
  d1_ = spectral_derivative(phi_, 1);
  d2_ = spectral_derivative(phi_, 2);
}

double VariationDirection::max_step(double margin) const {
  const double m = d2_.max_abs();
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - margin) / m;
}

double entropy(const Density& rho) {
  double s = 0.0;
  for (double v : rho.values()) {
    if (v > 0.0) s += v * std::log(v);
  }
  return s * rho.grid().spacing();
}

double kl(const Density& rho, const Density& pi) {
  if (!(rho.grid() == pi.grid())) throw InvalidArgument("kl: grid mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    if (rho[j] <= 0.0) continue;
    if (pi[j] <= 0.0) throw SupportMismatch(j);
    s += rho[j] * std::log(rho[j] / pi[j]);
  }
  return s * rho.grid().spacing();
}

double saddle_value(const Payoff& f, const Density& mu, const Density& nu) {
  const GridFunction V = potential_x(f, nu).sample(mu.grid());
  return quadrature(V.values(), mu.values()) + entropy(mu) - entropy(nu);
}

double ni_error(const Payoff& f, const Density& mu, const Density& nu) {
  const auto pots = induced_potentials(f, mu, nu);
  std::vector<double> neg_v(pots.V.values().begin(), pots.V.values().end());
  for (double& v : neg_v) v = -v;
  const double ni =
      entropy(mu) + entropy(nu) + log_integral_exp(pots.U.values()) + log_integral_exp(neg_v);
  if (ni < 0.0 && ni >= -1e-10) return 0.0;
  return ni;
}

double second_variation_form(const Density& mu, const GridFunction& V,
                             const VariationDirection& dir) {
  const GridFunction v2 = spectral_derivative(V, 2);
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double a = dir.d2()[j];
    const double b = dir.d1()[j];
    s += (a * a + v2[j] * b * b) * mu[j];
  }
  return s * mu.grid().spacing();
}

double variation_curve(const Payoff& f, const Density& mu, const Density& nu_fixed,
                       const VariationDirection& dir, double t) {
  const TrigSeries V = potential_x(f, nu_fixed);
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double rho = mu[j];
    if (rho <= 0.0) continue;
    const double jac = 1.0 + t * dir.d2()[j];
    if (!(jac > 0.0)) throw JacobianDegenerate(jac, t);
    s += (std::log(rho / jac) + V(mu.grid().node(j) + t * dir.d1()[j])) * rho;
  }
  return s * mu.grid().spacing();
}

FirstVariationReport first_variation_check(const Payoff& f, const Density& mu,
                                           const Density& nu_fixed,
                                           const VariationDirection& dir, double step) {
  if (step * dir.d2().max_abs() >= 1.0 - 1e-6) {
    throw JacobianDegenerate(1.0 - step * dir.d2().max_abs(), step);
  }
  FirstVariationReport r;
  r.step = step;
  const GridFunction drho = spectral_derivative(mu.as_function(), 1);
  const GridFunction dv = potential_x(f, nu_fixed).sample(mu.grid(), 1);
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    s += (drho[j] + dv[j] * mu[j]) * dir.d1()[j];
  }
  r.analytic = s * mu.grid().spacing();
  r.finite_difference = (variation_curve(f, mu, nu_fixed, dir, step) -
                         variation_curve(f, mu, nu_fixed, dir, -step)) /
                        (2.0 * step);
  r.gap = std::abs(r.finite_difference - r.analytic);
  return r;
}

SecondVariationReport second_variation(const Payoff& f, const Density& mu,
                                       const Density& nu_fixed, const VariationDirection& dir,
                                       double step) {
  if (step * dir.d2().max_abs() >= 1.0 - 1e-6) {
    throw JacobianDegenerate(1.0 - step * dir.d2().max_abs(), step);
  }
  SecondVariationReport r;
  r.step = step;
  r.value = second_variation_form(mu, potential_x(f, nu_fixed).sample(mu.grid()), dir);
  const double gp = variation_curve(f, mu, nu_fixed, dir, step);
  const double g0 = variation_curve(f, mu, nu_fixed, dir, 0.0);
  const double gm = variation_curve(f, mu, nu_fixed, dir, -step);
  r.finite_difference = (gp - 2.0 * g0 + gm) / (step * step);
  r.gap = std::abs(r.finite_difference - r.value);
  return r;
}

MetricSample evaluate_metrics(const Payoff& f, const Density& mu, const Density& nu,
                              const Density& mu_ref, const Density& nu_ref, double t) {
  MetricSample s;
  s.t = t;
  s.w2_mu = w2_circle(mu, mu_ref);
  s.w2_nu = w2_circle(nu, nu_ref);
  s.kl_mu = kl(mu, mu_ref);
  s.kl_nu = kl(nu, nu_ref);
  s.ni = ni_error(f, mu, nu);
  s.f_value = saddle_value(f, mu, nu);
  s.mass_mu = mu.mass();
  s.mass_nu = nu.mass();
  s.min_mu = mu.min();
  s.min_nu = nu.min();
  return s;
}

nlohmann::json to_json(const MetricSample& s) {
  return {{"t", s.t},         {"w2_mu", s.w2_mu},     {"w2_nu", s.w2_nu},
          {"kl_mu", s.kl_mu}, {"kl_nu", s.kl_nu},     {"ni", s.ni},
          {"f_value", s.f_value}, {"mass_mu", s.mass_mu}, {"mass_nu", s.mass_nu},
          {"min_mu", s.min_mu}, {"min_nu", s.min_nu}};
}

}  // namespace mflda
