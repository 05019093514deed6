#include "mflda/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "mflda/fft.hpp"

namespace mflda {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string unstable_message(double t, double dt, double m) {
  std::ostringstream os;
  os << "PDE step at t=" << t << " stayed negative (min " << m << ") down to substep " << dt;
  return os.str();
}

// u <- e^{-a dt} u + (1 - e^{-a dt}) / a * sign * (flux)', a = 4 pi^2 k^2.
std::vector<double> etd_advance(std::span<const double> u, std::span<const double> flux,
                                double sign, double dt) {
  const std::size_t n = u.size();
  auto uh = fft::forward(u);
  const auto fh = fft::forward(flux);
  for (std::size_t k = 0; k < uh.size(); ++k) {
    const double w = kTwoPi * static_cast<double>(k);
    const double a = w * w;
    const double decay = std::exp(-a * dt);
    const double phi1 = k == 0 ? dt : -std::expm1(-a * dt) / a;
    fft::Complex drift = 0.0;
    if (3 * k <= n) drift = sign * fft::Complex(0.0, w) * fh[k];
    uh[k] = decay * uh[k] + phi1 * drift;
  }
  return fft::inverse(uh, n);
}

double mass_defect(std::span<const double> v, double h) {
  double s = 0.0;
  for (double x : v) s += x;
  return std::abs(s * h - 1.0);
}

double min_value(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

}  // namespace

StepUnstable::StepUnstable(double t_, double dt_, double m)
    : Error(unstable_message(t_, dt_, m)), t(t_), dt(dt_), min_value(m) {}

double TrajectoryRecord::max_mass_defect() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.mass_defect);
  return m;
}

double TrajectoryRecord::min_density() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) m = std::min(m, s.min_density);
  return m;
}

RawState etd_substep(const Density& mu, const Density& nu, const Payoff& f, double dt) {
  const GridFunction vp = potential_x(f, nu).sample(mu.grid(), 1);
  const GridFunction up = potential_y(f, mu).sample(nu.grid(), 1);
  std::vector<double> flux_mu(mu.size()), flux_nu(nu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) flux_mu[j] = mu[j] * vp[j];
  for (std::size_t j = 0; j < nu.size(); ++j) flux_nu[j] = nu[j] * up[j];
  return {etd_advance(mu.values(), flux_mu, +1.0, dt), etd_advance(nu.values(), flux_nu, -1.0, dt)};
}

double cfl_limit(const Density& mu, const Density& nu, const Payoff& f, double cfl_safety) {
  const double vmax = potential_x(f, nu).sample(mu.grid(), 1).max_abs();
  const double umax = potential_y(f, mu).sample(nu.grid(), 1).max_abs();
  const double h = std::min(mu.grid().spacing(), nu.grid().spacing());
  return cfl_safety * h / std::max({vmax, umax, 1e-12});
}

StepResult pde_step(const Density& mu, const Density& nu, const Payoff& f, double dt,
                    double cfl_safety, int max_halvings) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("pde_step: dt must be positive");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
    throw InvalidArgument("pde_step: cfl_safety must lie in (0, 1]");
  }
  if (!(mu.grid() == nu.grid())) throw InvalidArgument("pde_step: mu and nu must share a grid");
  const double limit = cfl_limit(mu, nu, f, cfl_safety);
  const auto base = static_cast<long long>(std::max(1.0, std::ceil(dt / limit - 1e-12)));
  double worst = 0.0;
  for (int halvings = 0; halvings <= max_halvings; ++halvings) {
    const long long subs = base << halvings;
    const double sub_dt = dt / static_cast<double>(subs);
    StepDiagnostics d;
    d.dt = dt;
    d.substeps = static_cast<int>(subs);
    d.halvings = halvings;
    d.min_density = std::numeric_limits<double>::infinity();
    Density m = mu;
    Density v = nu;
    bool ok = true;
    for (long long s = 0; s < subs; ++s) {
      RawState raw = etd_substep(m, v, f, sub_dt);
      const double lo = std::min(min_value(raw.mu), min_value(raw.nu));
      d.min_density = std::min(d.min_density, lo);
      d.mass_defect = std::max({d.mass_defect, mass_defect(raw.mu, m.grid().spacing()),
                                mass_defect(raw.nu, v.grid().spacing())});
      if (lo < -Density::kClipTolerance) {
        ok = false;
        worst = lo;
        break;
      }
      m = Density(m.grid(), std::move(raw.mu));
      v = Density(v.grid(), std::move(raw.nu));
    }
    if (ok) return {std::move(m), std::move(v), d};
  }
  throw StepUnstable(0.0, dt / static_cast<double>(base << max_halvings), worst);
}

TrajectoryRecord evolve(const Density& mu0, const Density& nu0, const Payoff& f,
                        const EvolverConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0)) throw InvalidArgument("evolve: dt and t_end must be positive");
  if (cfg.snapshot_stride < 1) throw InvalidArgument("evolve: snapshot_stride must be >= 1");
  if (!(mu0.grid() == nu0.grid())) throw InvalidArgument("evolve: mu and nu must share a grid");
  const auto n_steps =
      static_cast<long long>(std::max(1.0, std::ceil(cfg.t_end / cfg.dt - 1e-9)));
  TrajectoryRecord rec;
  rec.steps.reserve(static_cast<std::size_t>(n_steps));
  rec.times.push_back(0.0);
  rec.mu.push_back(mu0);
  rec.nu.push_back(nu0);
  Density mu = mu0;
  Density nu = nu0;
  double t_prev = 0.0;
  for (long long s = 1; s <= n_steps; ++s) {
    const double t = s == n_steps ? cfg.t_end : static_cast<double>(s) * cfg.dt;
    std::optional<StepResult> r;
    try {
      r.emplace(pde_step(mu, nu, f, t - t_prev, cfg.cfl_safety, cfg.max_halvings));
    } catch (const StepUnstable& e) {
      throw StepUnstable(t_prev, e.dt, e.min_value);
    }
    r->diagnostics.t = t;
    rec.steps.push_back(r->diagnostics);
    mu = std::move(r->mu);
    nu = std::move(r->nu);
    t_prev = t;
    if (s % cfg.snapshot_stride == 0 || s == n_steps) {
      rec.times.push_back(t);
      rec.mu.push_back(mu);
      rec.nu.push_back(nu);
    }
  }
  return rec;
}

double stationarity_defect(const Density& mu, const Density& nu, const Payoff& f) {
  if (!(mu.min() > 0.0 && nu.min() > 0.0)) {
    throw InvalidArgument("stationarity_defect: densities must be strictly positive");
  }
  GridFunction a(mu.grid());
  GridFunction b(nu.grid());
  const GridFunction V = potential_x(f, nu).sample(mu.grid());
  const GridFunction U = potential_y(f, mu).sample(nu.grid());
  for (std::size_t j = 0; j < mu.size(); ++j) a[j] = std::log(mu[j]) + V[j];
  for (std::size_t j = 0; j < nu.size(); ++j) b[j] = std::log(nu[j]) - U[j];
  return std::max(spectral_derivative(a, 1).max_abs(), spectral_derivative(b, 1).max_abs());
}

}  // namespace mflda
