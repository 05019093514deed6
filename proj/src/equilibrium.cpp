#include "mflda/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mflda/geometry.hpp"

namespace mflda {

namespace {

std::string not_converged_message(double rm, double rn, int it) {
  std::ostringstream os;
  os << "best-response iteration did not converge after " << it
     << " iterations (residual_mu=" << rm << ", residual_nu=" << rn << ")";
  return os.str();
}

std::string certification_message(const std::string& q, double v, double lim) {
  std::ostringstream os;
  os << "certification failed: " << q << " = " << v << " exceeds " << lim;
  return os.str();
}

double max_diff(const Density& a, const Density& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

GridFunction negated(const GridFunction& g) {
  GridFunction out = g;
  for (double& v : out.values()) v = -v;
  return out;
}

}  // namespace

NotConverged::NotConverged(double rm, double rn, int it)
    : Error(not_converged_message(rm, rn, it)), residual_mu(rm), residual_nu(rn), iterations(it) {}

CertificationFailed::CertificationFailed(const std::string& q, double v, double lim)
    : Error(certification_message(q, v, lim)), quantity(q), value(v), limit(lim) {}

Density gibbs(const GridFunction& w) {
  const auto vals = w.values();
  const double wmax = *std::max_element(vals.begin(), vals.end());
  std::vector<double> e(vals.size());
  for (std::size_t j = 0; j < vals.size(); ++j) e[j] = std::exp(vals[j] - wmax);
  return Density(w.grid(), std::move(e));
}

std::pair<double, double> fixed_point_residuals(const Payoff& f, const Density& mu,
                                                const Density& nu) {
  const auto pots = induced_potentials(f, mu, nu);
  return {max_diff(mu, gibbs(negated(pots.V))), max_diff(nu, gibbs(pots.U))};
}

EquilibriumPair make_equilibrium_pair(const Payoff& f, Density mu, Density nu, double tol,
                                      int iterations) {
  auto pots = induced_potentials(f, mu, nu);
  const double rm = max_diff(mu, gibbs(negated(pots.V)));
  const double rn = max_diff(nu, gibbs(pots.U));
  return EquilibriumPair{std::move(mu), std::move(nu), std::move(pots.V), std::move(pots.U),
                         rm, rn, iterations, tol};
}

EquilibriumPair solve_mne(const Payoff& f, const PeriodicGrid& grid,
                          const SolveOptions& options) {
  return solve_mne(f, Density::uniform(grid), Density::uniform(grid), options);
}

EquilibriumPair solve_mne(const Payoff& f, Density mu, Density nu, const SolveOptions& options) {
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw InvalidArgument("solve_mne: damping must lie in (0, 1]");
  }
  if (!(options.tol >= 1e-14)) throw InvalidArgument("solve_mne: tol must be >= 1e-14");
  if (!(mu.grid() == nu.grid())) throw InvalidArgument("solve_mne: players need the same grid");
  const PeriodicGrid grid = mu.grid();
  const double g = options.damping;
  double rm = 0.0;
  double rn = 0.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    const auto pots = induced_potentials(f, mu, nu);
    const Density bx = gibbs(negated(pots.V));
    const Density by = gibbs(pots.U);
    std::vector<double> m(grid.size()), v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      m[j] = (1.0 - g) * mu[j] + g * bx[j];
      v[j] = (1.0 - g) * nu[j] + g * by[j];
    }
    mu = Density(grid, std::move(m));
    nu = Density(grid, std::move(v));
    std::tie(rm, rn) = fixed_point_residuals(f, mu, nu);
    if (!std::isfinite(rm) || !std::isfinite(rn)) break;
    if (rm <= options.tol && rn <= options.tol) {
      return make_equilibrium_pair(f, std::move(mu), std::move(nu), options.tol, it);
    }
  }
  throw NotConverged(rm, rn, options.max_iter);
}

nlohmann::json CertificateReport::to_json() const {
  return {{"residual_mu", residual_mu}, {"residual_nu", residual_nu}, {"ni", ni}, {"tol", tol}};
}

CertificateReport certify(const EquilibriumPair& pair, const Payoff& f) {
  CertificateReport r;
  std::tie(r.residual_mu, r.residual_nu) = fixed_point_residuals(f, pair.mu_star, pair.nu_star);
  r.ni = ni_error(f, pair.mu_star, pair.nu_star);
  r.tol = pair.tol;
  if (r.residual_mu > pair.tol) throw CertificationFailed("residual_mu", r.residual_mu, pair.tol);
  if (r.residual_nu > pair.tol) throw CertificationFailed("residual_nu", r.residual_nu, pair.tol);
  if (r.ni > 10.0 * pair.tol) throw CertificationFailed("ni", r.ni, 10.0 * pair.tol);
  return r;
}

}  // namespace mflda
