#include "mflda/harness.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "mflda/io.hpp"
#include "mflda/particles.hpp"

namespace mflda {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double energy_of(const MetricSample& s) { return s.energy(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

GridFunction cosine_mode(const PeriodicGrid& grid, int mode) {
  GridFunction g(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) g[j] = std::cos(kTwoPi * mode * grid.node(j));
  return g;
}

// exp(-sum a cos(2 pi k x + theta)) from a list of {"a","k","theta"}.
Density gibbs_from_terms(const PeriodicGrid& grid, const nlohmann::json& terms) {
  GridFunction w(grid);
  for (const auto& t : terms) {
    const double a = t.value("a", 0.0);
    const int k = t.value("k", 0);
    const double theta = t.value("theta", 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      w[j] -= a * std::cos(kTwoPi * k * grid.node(j) + theta);
    }
  }
  return gibbs(w);
}

// Masses of the grid density on `bins` equal cells aligned with the nodes,
// integrating the piecewise-linear profile.
Density bin_density(const Density& rho, std::size_t bins) {
  const std::size_t n = rho.size();
  if (bins == 0 || n % bins != 0) throw InvalidArgument("bin_density: bins must divide the grid size");
  const std::size_t per = n / bins;
  const double h = rho.grid().spacing();
  std::vector<double> mass(bins, 0.0);
  for (std::size_t j = 0; j < n; ++j) mass[j / per] += 0.5 * h * (rho[j] + rho[(j + 1) % n]);
  return Density(PeriodicGrid(bins), std::move(mass));
}

}  // namespace

InsufficientData::InsufficientData(std::size_t have, std::size_t need)
    : Error("rate fit needs at least " + std::to_string(need) + " usable samples, got " +
            std::to_string(have)) {}

NonPositiveEnergy::NonPositiveEnergy(double t, double e)
    : Error("energy is not positive at t=" + std::to_string(t) + " (E=" + std::to_string(e) + ")") {}

nlohmann::json RateFit::to_json() const {
  return {{"lambda_hat", lambda_hat}, {"window", {t_a, t_b}}, {"r_squared", r_squared},
          {"n_points", n_points},     {"slope", slope},       {"intercept", intercept}};
}

RateFit fit_rate(const std::vector<MetricSample>& samples, double t_a, double t_b) {
  constexpr std::size_t kMinPoints = 10;
  std::vector<double> ts, ls;
  for (const auto& s : samples) {
    if (s.t < t_a || s.t > t_b) continue;
    const double e = energy_of(s);
    if (!(e > 0.0)) throw NonPositiveEnergy(s.t, e);
    if (e < kEnergyFloor) continue;
    ts.push_back(s.t);
    ls.push_back(std::log(e));
  }
  if (ts.size() < kMinPoints) throw InsufficientData(ts.size(), kMinPoints);
  const auto n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  RateFit r;
  r.slope = stl / stt;
  r.intercept = ml - r.slope * mt;
  r.lambda_hat = -r.slope / 2.0;
  r.t_a = t_a;
  r.t_b = t_b;
  r.n_points = ts.size();
  if (sll == 0.0) {
    r.r_squared = 1.0;
  } else {
    double ssr = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double d = ls[i] - (r.intercept + r.slope * ts[i]);
      ssr += d * d;
    }
    r.r_squared = std::clamp(1.0 - ssr / sll, 0.0, 1.0);
  }
  return r;
}

std::pair<double, double> default_fit_window(const std::vector<MetricSample>& samples,
                                             double t_a) {
  double t_b = t_a;
  for (const auto& s : samples) {
    if (s.t >= t_a && energy_of(s) >= 100.0 * kEnergyFloor) t_b = std::max(t_b, s.t);
  }
  return {t_a, t_b};
}

double max_energy_increase(const std::vector<MetricSample>& samples, double t_from) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    if (samples[k].t < t_from) continue;
    worst = std::max(worst, energy_of(samples[k + 1]) - energy_of(samples[k]));
  }
  return worst;
}

RunManifest RunManifest::begin(std::string command) {
  RunManifest m;
  m.command = std::move(command);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  m.started_at = os.str();
  return m;
}

void RunManifest::finish(std::chrono::steady_clock::time_point start) {
  wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},         {"payoff", payoff},
          {"grid", grid},               {"tolerances", tolerances},
          {"seeds", seeds},             {"parameters", parameters},
          {"outputs", outputs},         {"started_at", started_at},
          {"wall_clock_seconds", wall_clock_seconds}, {"versions", artifact_versions()}};
}

nlohmann::json artifact_versions() {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  std::ostringstream json;
  json << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.'
       << NLOHMANN_JSON_VERSION_PATCH;
  return {{"mflda", kVersion},
          {"fftw", std::string(fftw_version)},
          {"eigen", eigen.str()},
          {"nlohmann_json", json.str()}};
}

EquilibriumPair solve_equilibrium(const Payoff& f, const PeriodicGrid& grid,
                                  const MneSolveSettings& s) {
  SolveOptions o{s.damping, s.tol, s.max_iter};
  for (int k = 0; k <= s.max_damping_halvings; ++k) {
    try {
      return solve_mne(f, grid, o);
    } catch (const NotConverged&) {
      o.damping *= 0.5;
    }
  }
  // Long-time PDE integration towards the stationary pair, then polish.
  EvolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = s.fallback_t_end;
  cfg.snapshot_stride = std::numeric_limits<int>::max();
  const TrajectoryRecord rec = evolve(Density::uniform(grid), Density::uniform(grid), f, cfg);
  o.damping = s.damping;
  for (int k = 0; k <= s.max_damping_halvings; ++k) {
    try {
      return solve_mne(f, rec.mu.back(), rec.nu.back(), o);
    } catch (const NotConverged&) {
      if (k == s.max_damping_halvings) throw;
      o.damping *= 0.5;
    }
  }
  throw NotConverged(1.0, 1.0, s.max_iter);
}

nlohmann::json equilibrium_to_json(const EquilibriumPair& eq, const Payoff& f) {
  return {{"payoff", f.to_json()},
          {"grid", eq.mu_star.size()},
          {"mu_star", density_array(eq.mu_star)},
          {"nu_star", density_array(eq.nu_star)},
          {"residual_mu", eq.residual_mu},
          {"residual_nu", eq.residual_nu},
          {"iterations", eq.iterations},
          {"tol", eq.tol},
          {"sup_norm", f.sup_norm()}};
}

EquilibriumPair equilibrium_from_json(const nlohmann::json& j, Payoff* payoff) {
  try {
    const Payoff f = Payoff::from_json(j.at("payoff"));
    if (payoff) *payoff = f;
    return make_equilibrium_pair(f, density_from_array(j.at("mu_star")),
                                 density_from_array(j.at("nu_star")), j.value("tol", 1e-12),
                                 j.value("iterations", 0));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("equilibrium file: ") + e.what());
  }
}

Density perturb_density(const Density& rho, const GridFunction& phi, double eps) {
  const double m = phi.max_abs();
  if (m == 0.0) return rho;
  std::vector<double> v(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) v[j] = rho[j] * (1.0 + eps * phi[j] / m);
  return Density(rho.grid(), std::move(v));
}

GridFunction random_direction(const PeriodicGrid& grid, std::uint64_t seed, std::uint64_t stream) {
  GridFunction g(grid);
  for (int m = 1; m <= 4; ++m) {
    const double a = counter_normal(seed, static_cast<std::uint64_t>(2 * m), 0, stream);
    const double b = counter_normal(seed, static_cast<std::uint64_t>(2 * m + 1), 0, stream);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x = kTwoPi * m * grid.node(j);
      g[j] += (a * std::cos(x) + b * std::sin(x)) / (m * m);
    }
  }
  return g;
}

std::pair<Density, Density> make_initial(const nlohmann::json& init, const EquilibriumPair& eq,
                                         const SpectralResult* spectral) {
  const PeriodicGrid grid = eq.mu_star.grid();
  const std::string kind = init.value("kind", "");
  if (kind == "uniform") return {Density::uniform(grid), Density::uniform(grid)};
  if (kind == "gibbs") {
    const auto& tx = init.at("potential_terms");
    const auto& ty = init.contains("potential_terms_y") ? init.at("potential_terms_y") : tx;
    return {gibbs_from_terms(grid, tx), gibbs_from_terms(grid, ty)};
  }
  if (kind == "perturbed_mne") {
    const double eps = init.value("epsilon", 0.01);
    const int mode = init.value("mode", 0);
    const bool eigen = init.value("direction", "") == "eigen" || mode == 0;
    if (eigen) {
      if (!spectral) throw InvalidArgument("make_initial: eigen-direction start needs the spectral result");
      return {perturb_density(eq.mu_star, spectral->eigenfunction_x, eps),
              perturb_density(eq.nu_star, spectral->eigenfunction_y, eps)};
    }
    if (mode < 0) throw InvalidArgument("make_initial: mode must be >= 0");
    const GridFunction phi = cosine_mode(grid, mode);
    return {perturb_density(eq.mu_star, phi, eps), perturb_density(eq.nu_star, phi, eps)};
  }
  throw InvalidArgument("make_initial: unknown kind '" + kind + "'");
}

std::vector<MetricSample> trajectory_metrics(const Payoff& f, const TrajectoryRecord& rec,
                                             const Density& mu_ref, const Density& nu_ref,
                                             unsigned threads) {
  return parallel_map(rec.times.size(), threads, [&](std::size_t i) {
    return evaluate_metrics(f, rec.mu[i], rec.nu[i], mu_ref, nu_ref, rec.times[i]);
  });
}

EviReport evi_check(const Payoff& f, const TrajectoryRecord& rec,
                    const std::vector<MetricSample>& samples, const Density& mu_star,
                    const Density& nu_star, double lambda, double t_from) {
  EviReport r;
  r.max_violation_mu = -std::numeric_limits<double>::infinity();
  r.max_violation_nu = -std::numeric_limits<double>::infinity();
  auto rhs_mu = [&](std::size_t k) {
    const double w = samples[k].w2_mu;
    return saddle_value(f, mu_star, rec.nu[k]) - samples[k].f_value - 0.5 * lambda * w * w;
  };
  auto rhs_nu = [&](std::size_t k) {
    const double w = samples[k].w2_nu;
    return samples[k].f_value - saddle_value(f, rec.mu[k], nu_star) - 0.5 * lambda * w * w;
  };
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    if (samples[k].t < t_from) continue;
    const double dt = samples[k + 1].t - samples[k].t;
    const auto sq = [](double v) { return v * v; };
    const double lhs_mu = (sq(samples[k + 1].w2_mu) - sq(samples[k].w2_mu)) / (2.0 * dt);
    const double lhs_nu = (sq(samples[k + 1].w2_nu) - sq(samples[k].w2_nu)) / (2.0 * dt);
    r.max_violation_mu =
        std::max(r.max_violation_mu, lhs_mu - 0.5 * (rhs_mu(k) + rhs_mu(k + 1)));
    r.max_violation_nu =
        std::max(r.max_violation_nu, lhs_nu - 0.5 * (rhs_nu(k) + rhs_nu(k + 1)));
    ++r.checked;
  }
  return r;
}

namespace {

struct StabilityCell {
  double eps = 0.0;
  std::string direction;
  std::size_t index = 0;  // random-direction index
};

nlohmann::json run_stability_cell(const Payoff& f, const EquilibriumPair& eq,
                                  const SpectralResult& sr, const StabilityOptions& opt,
                                  const StabilityCell& cell) {
  constexpr double kEviTol = 1e-4;
  constexpr double kConservationTol = 1e-12;
  nlohmann::json out = {{"epsilon", cell.eps}, {"direction", cell.direction}};
  try {
    Density mu0 = eq.mu_star;
    Density nu0 = eq.nu_star;
    if (cell.direction == "eigen") {
      mu0 = perturb_density(eq.mu_star, sr.eigenfunction_x, cell.eps);
      nu0 = perturb_density(eq.nu_star, sr.eigenfunction_y, cell.eps);
    } else {
      const PeriodicGrid g = eq.mu_star.grid();
      mu0 = perturb_density(eq.mu_star, random_direction(g, opt.seed, 2 * cell.index), cell.eps);
      nu0 = perturb_density(eq.nu_star, random_direction(g, opt.seed, 2 * cell.index + 1), cell.eps);
    }
    EvolverConfig cfg{opt.dt, opt.t_end, opt.stride};
    const TrajectoryRecord rec = evolve(mu0, nu0, f, cfg);
    const auto samples = trajectory_metrics(f, rec, eq.mu_star, eq.nu_star);

    const double increase = max_energy_increase(samples, 0.1);
    const bool monotone = increase <= kEnergyFloor;
    const EviReport evi =
        evi_check(f, rec, samples, eq.mu_star, eq.nu_star, 0.9 * sr.lambda_gap, 0.1);
    const bool evi_ok = evi.max_violation_mu <= kEviTol && evi.max_violation_nu <= kEviTol;
    const bool conserved = rec.max_mass_defect() <= kConservationTol &&
                           rec.min_density() >= -kConservationTol;

    out["monotone"] = {{"max_increase_after_0.1", increase}, {"passed", monotone}};
    out["evi"] = {{"lambda", 0.9 * sr.lambda_gap},
                  {"max_violation_mu", evi.max_violation_mu},
                  {"max_violation_nu", evi.max_violation_nu},
                  {"checked", evi.checked},
                  {"tol", kEviTol},
                  {"passed", evi_ok}};
    out["conservation"] = {{"max_mass_defect", rec.max_mass_defect()},
                           {"min_density_before_clip", rec.min_density()},
                           {"passed", conserved}};
    bool passed = monotone && evi_ok && conserved;
    try {
      const auto [t_a, t_b] = default_fit_window(samples);
      const RateFit fit = fit_rate(samples, t_a, t_b);
      const double ratio = fit.lambda_hat / sr.lambda_gap;
      out["fit"] = fit.to_json();
      out["lambda_hat_over_gap"] = ratio;
      if (cell.direction == "eigen") {
        const bool rate_ok = ratio >= 0.8 && ratio <= 1.2;
        out["rate_passed"] = rate_ok;
        passed = passed && rate_ok;
      }
    } catch (const Error& e) {
      out["fit_error"] = e.what();
      if (cell.direction == "eigen") passed = false;
    }
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& s : samples) {
      curve.push_back({{"t", s.t}, {"E", s.energy()}, {"kl", s.kl_mu + s.kl_nu}, {"ni", s.ni}});
    }
    out["curve"] = std::move(curve);
    out["passed"] = passed;
  } catch (const std::exception& e) {
    out["error"] = e.what();
    out["passed"] = false;
  }
  return out;
}

nlohmann::json far_start_run(const Payoff& f, const EquilibriumPair& eq,
                             const StabilityOptions& opt) {
  nlohmann::json out;
  try {
    const PeriodicGrid g = eq.mu_star.grid();
    const Density mu0 = Density::uniform(g);
    const Density nu0 = gibbs_from_terms(g, nlohmann::json::array({{{"a", -8.0}, {"k", 1}, {"theta", -0.6 * std::numbers::pi}}}));
    EvolverConfig cfg{opt.dt, opt.t_end, opt.stride};
    const TrajectoryRecord rec = evolve(mu0, nu0, f, cfg);
    const auto samples = trajectory_metrics(f, rec, eq.mu_star, eq.nu_star);
    const double lp = f.convexity_constant();
    double worst = 0.0;
    for (const auto& s : samples) {
      const double cap = std::exp(-2.0 * lp * s.t) * samples.front().energy() * (1.0 + 1e-3);
      worst = std::max(worst, s.energy() / cap);
    }
    out = {{"E0", samples.front().energy()},
           {"E_end", samples.back().energy()},
           {"converged", samples.back().energy() <= 1e-6 * samples.front().energy()},
           {"convexity_constant", lp},
           {"growth_cap_ratio_max", worst}};
  } catch (const std::exception& e) {
    out["error"] = e.what();
  }
  out["asserted"] = false;
  return out;
}

}  // namespace

nlohmann::json experiment_local_stability(const Payoff& f, std::size_t n,
                                          const StabilityOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest = RunManifest::begin("report local-stability");
  manifest.payoff = f.to_json();
  manifest.grid = n;
  manifest.tolerances = {{"mne_tol", opt.mne.tol}, {"evi_tol", 1e-4}, {"conservation", 1e-12},
                         {"energy_floor", kEnergyFloor}};
  manifest.seeds = {opt.seed};
  manifest.parameters = {{"epsilons", opt.epsilons}, {"random_directions", opt.random_directions},
                         {"dt", opt.dt}, {"t_end", opt.t_end}, {"stride", opt.stride}};

  nlohmann::json report = {{"experiment", "local_stability"}};
  bool passed = true;
  try {
    const EquilibriumPair eq = solve_equilibrium(f, PeriodicGrid(n), opt.mne);
    const CertificateReport cert = certify(eq, f);
    report["equilibrium"] = cert.to_json();
    report["equilibrium"]["iterations"] = eq.iterations;
    const SpectralResult sr = spectral_gap(eq, f);
    report["spectral"] = sr.to_json(false);

    std::vector<StabilityCell> cells;
    for (double eps : opt.epsilons) {
      cells.push_back({eps, "eigen", 0});
      for (int r = 0; r < opt.random_directions; ++r) {
        cells.push_back({eps, "random_" + std::to_string(r), static_cast<std::size_t>(r)});
      }
    }
    auto runs = parallel_map(cells.size(), opt.threads, [&](std::size_t i) {
      return run_stability_cell(f, eq, sr, opt, cells[i]);
    });
    for (const auto& r : runs) passed = passed && r.at("passed").get<bool>();
    report["runs"] = std::move(runs);
    if (opt.far_start) report["far_start"] = far_start_run(f, eq, opt);
    report["error_budget"] = {
        {"w2_quantile", "piecewise-linear quantiles at 4N points; relative error in E well below 1e-6"},
        {"time_stepping", "exponential Euler, first order in the drift"},
        {"eigenvalue", "second-order generator extrapolated over N, 2N, 4N"}};
  } catch (const std::exception& e) {
    report["error"] = e.what();
    passed = false;
  }
  report["passed"] = passed;
  manifest.finish(start);
  report["manifest"] = manifest.to_json();
  return report;
}

nlohmann::json experiment_particle_consistency(const Payoff& f, std::size_t n,
                                               const ParticleConsistencyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest = RunManifest::begin("report particle-consistency");
  manifest.payoff = f.to_json();
  manifest.grid = n;
  manifest.seeds = opt.seeds;
  manifest.tolerances = {{"variance_relative", 0.05}, {"drift_agreement", 1e-6}};
  manifest.parameters = {{"particle_counts", opt.particle_counts}, {"dt", opt.dt},
                         {"t_match", opt.t_match}, {"histogram_bins", opt.histogram_bins},
                         {"variance_particles", opt.variance_particles},
                         {"variance_time", opt.variance_time},
                         {"drift_particles", opt.drift_particles}, {"init", opt.init}};
  nlohmann::json report = {{"experiment", "particle_consistency"}};
  bool passed = true;
  try {
    const PeriodicGrid grid(n);
    const EquilibriumPair eq = solve_equilibrium(f, grid);
    const auto steps = static_cast<std::size_t>(std::llround(opt.t_match / opt.dt));

    // Drift oracle: deposition against exact moments, noise off, particles at
    // the equilibrium quantiles. A zero payoff has zero drift either way, so
    // the comparison then uses a coupled test payoff.
    {
      const Payoff fd = f.is_zero() ? Payoff({{1.0, 1, 0, 0.0}, {-1.0, 0, 1, 0.0}, {0.3, 1, 1, 0.5}})
                                    : f;
      const EquilibriumPair eqd = f.is_zero() ? solve_equilibrium(fd, grid) : eq;
      const ParticleEnsemble ens = make_ensemble(quantile_points(eqd.mu_star, opt.drift_particles),
                                                 quantile_points(eqd.nu_star, opt.drift_particles),
                                                 0, opt.dt);
      const Drift a = particle_drift(ens, fd, grid, DriftMethod::Deposition);
      const Drift b = particle_drift(ens, fd, grid, DriftMethod::Moments);
      double diff = 0.0;
      for (std::size_t p = 0; p < ens.size(); ++p) {
        diff = std::max({diff, std::abs(a.bx[p] - b.bx[p]), std::abs(a.cy[p] - b.cy[p])});
      }
      const bool ok = diff <= 1e-6;
      report["drift_diagnostic"] = {{"payoff", fd.to_json()}, {"particles", opt.drift_particles},
                                    {"max_difference", diff}, {"passed", ok}};
      passed = passed && ok;
    }

    // Diffusion coefficient from a point start.
    if (f.is_zero() && opt.variance_particles > 0) {
      ParticleEnsemble ens = make_ensemble(std::vector<double>(opt.variance_particles, 0.0),
                                           std::vector<double>(opt.variance_particles, 0.0),
                                           opt.seeds.empty() ? 0 : opt.seeds.front(), opt.dt);
      const auto vsteps = static_cast<std::size_t>(std::llround(opt.variance_time / opt.dt));
      ParticleOptions po;
      po.threads = opt.threads;
      for (std::size_t s = 0; s < vsteps; ++s) ens = particle_step(std::move(ens), f, grid, po);
      auto variance = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size());
      };
      const double vx = variance(ens.lift_x);
      const double vy = variance(ens.lift_y);
      const double target = 2.0 * ens.time();
      const double rel = std::max(std::abs(vx - target), std::abs(vy - target)) / target;
      const bool ok = rel <= 0.05;
      report["variance"] = {{"t", ens.time()}, {"var_x", vx}, {"var_y", vy}, {"target", target},
                            {"relative_error", rel}, {"passed", ok}};
      passed = passed && ok;
    }

    // Histogram KL against the PDE at t_match.
    const auto [mu0, nu0] = make_initial(opt.init, eq, nullptr);
    EvolverConfig cfg;
    cfg.dt = opt.dt / 10.0;
    cfg.t_end = opt.t_match;
    cfg.snapshot_stride = std::numeric_limits<int>::max();
    const TrajectoryRecord pde = evolve(mu0, nu0, f, cfg);
    const Density ref_mu = bin_density(pde.mu.back(), opt.histogram_bins);
    const Density ref_nu = bin_density(pde.nu.back(), opt.histogram_bins);
    const PeriodicGrid bins(opt.histogram_bins);

    struct Cell {
      std::size_t np;
      std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t np : opt.particle_counts) {
      for (std::uint64_t s : opt.seeds) cells.push_back({np, s});
    }
    const auto kls = parallel_map(cells.size(), opt.threads, [&](std::size_t i) {
      const Cell c = cells[i];
      ParticleEnsemble ens = make_ensemble(sample_density(mu0, c.np, c.seed, 0),
                                           sample_density(nu0, c.np, c.seed, 1), c.seed, opt.dt);
      for (std::size_t s = 0; s < steps; ++s) ens = particle_step(std::move(ens), f, grid);
      return kl(histogram(ens.x, bins), ref_mu) + kl(histogram(ens.y, bins), ref_nu);
    });
    nlohmann::json table = nlohmann::json::array();
    std::vector<double> medians;
    for (std::size_t a = 0; a < opt.particle_counts.size(); ++a) {
      std::vector<double> v(kls.begin() + static_cast<std::ptrdiff_t>(a * opt.seeds.size()),
                            kls.begin() + static_cast<std::ptrdiff_t>((a + 1) * opt.seeds.size()));
      medians.push_back(median(v));
      table.push_back({{"particles", opt.particle_counts[a]}, {"kl", v}, {"median", medians.back()}});
    }
    bool decreasing = true;
    for (std::size_t a = 0; a + 1 < medians.size(); ++a) decreasing = decreasing && medians[a + 1] < medians[a];
    report["kl_vs_pde"] = {{"t", opt.t_match}, {"runs", table}, {"decreasing", decreasing}};
    passed = passed && decreasing;
  } catch (const std::exception& e) {
    report["error"] = e.what();
    passed = false;
  }
  report["passed"] = passed;
  manifest.finish(start);
  report["manifest"] = manifest.to_json();
  return report;
}

}  // namespace mflda
