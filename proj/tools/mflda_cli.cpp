// mflda: equilibria, spectral gaps and descent-ascent dynamics for
// entropy-regularized zero-sum games on the circle.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mflda/dynamics.hpp"
#include "mflda/equilibrium.hpp"
#include "mflda/geometry.hpp"
#include "mflda/harness.hpp"
#include "mflda/io.hpp"
#include "mflda/particles.hpp"
#include "mflda/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mflda;

namespace {

struct Globals {
  std::size_t grid = 256;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::string log_level = "info";
};

fs::path resolve(const Globals& g, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.out_dir) / path;
}

json load_json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return json::parse(arg);
  return read_json(arg);
}

void write_sidecar(const fs::path& out, const json& j) {
  fs::path side = out;
  side.replace_extension(".manifest.json");
  write_json(side, j);
}

int cmd_equilibrium(const Globals& g, const std::string& payoff_path, double tol, double damping,
                    int max_iter, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("equilibrium");
  const Payoff f = Payoff::from_json(read_json(payoff_path));
  m.payoff = f.to_json();
  m.grid = g.grid;
  m.tolerances = {{"tol", tol}};
  m.parameters = {{"damping", damping}, {"max_iter", max_iter}};
  MneSolveSettings s;
  s.tol = tol;
  s.damping = damping;
  s.max_iter = max_iter;
  const EquilibriumPair eq = solve_equilibrium(f, PeriodicGrid(g.grid), s);
  spdlog::info("equilibrium after {} iterations, residuals {:.3e} / {:.3e}", eq.iterations,
               eq.residual_mu, eq.residual_nu);
  json j = equilibrium_to_json(eq, f);
  bool ok = true;
  try {
    j["certificate"] = certify(eq, f).to_json();
  } catch (const CertificationFailed& e) {
    spdlog::error("{}", e.what());
    j["certificate"] = {{"failed", e.quantity}, {"value", e.value}, {"limit", e.limit}};
    ok = false;
  }
  j["certified"] = ok;
  const fs::path path = resolve(g, out);
  m.outputs = {path.string()};
  m.finish(start);
  j["manifest"] = m.to_json();
  write_json(path, j);
  return ok ? 0 : 1;
}

int cmd_gap(const Globals& g, const std::string& eq_path, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("gap");
  Payoff f;
  const EquilibriumPair eq = equilibrium_from_json(read_json(eq_path), &f);
  m.payoff = f.to_json();
  m.grid = eq.mu_star.size();
  const SpectralResult sr = spectral_gap(eq, f);
  spdlog::info("lambda_gap = {:.10f} (Holley-Stroock bound {:.6f})", sr.lambda_gap,
               sr.holley_stroock_bound);
  const double agree_x = std::abs(sr.lambda_x - sr.lambda_x_rayleigh) / sr.lambda_x;
  const double agree_y = std::abs(sr.lambda_y - sr.lambda_y_rayleigh) / sr.lambda_y;
  const json checks = {
      {"positive", sr.lambda_gap > 0.0},
      {"route_agreement", agree_x <= 1e-7 && agree_y <= 1e-7},
      {"holley_stroock", sr.lambda_gap >= sr.holley_stroock_bound - 1e-9},
      {"eigen_residual", sr.residual_x <= 1e-9 && sr.residual_y <= 1e-9}};
  bool ok = true;
  for (const auto& [k, v] : checks.items()) ok = ok && v.get<bool>();
  json j = sr.to_json();
  j["relative_route_gap_x"] = agree_x;
  j["relative_route_gap_y"] = agree_y;
  j["checks"] = checks;
  j["passed"] = ok;
  const fs::path path = resolve(g, out);
  m.tolerances = {{"route_agreement", 1e-7}, {"eigen_residual", 1e-9}};
  m.outputs = {path.string()};
  m.finish(start);
  j["manifest"] = m.to_json();
  write_json(path, j);
  return ok ? 0 : 1;
}

int cmd_evolve(const Globals& g, const std::string& eq_path, const std::string& payoff_path,
               const std::string& init, double dt, double t_end, int stride, double cfl,
               const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("evolve");
  Payoff f;
  const EquilibriumPair eq = equilibrium_from_json(read_json(eq_path), &f);
  if (!payoff_path.empty()) f = Payoff::from_json(read_json(payoff_path));
  const json init_json = init.empty() ? json{{"kind", "perturbed_mne"}, {"epsilon", 0.01}, {"mode", 0}}
                                 : load_json_arg(init);
  std::optional<SpectralResult> sr;
  const bool needs_gap = init_json.value("kind", "") == "perturbed_mne" &&
                         (init_json.value("mode", 0) == 0 || init_json.value("direction", "") == "eigen");
  if (needs_gap) sr = spectral_gap(eq, f);
  const auto [mu0, nu0] = make_initial(init_json, eq, sr ? &*sr : nullptr);
  EvolverConfig cfg{dt, t_end, stride, cfl};
  const TrajectoryRecord rec = evolve(mu0, nu0, f, cfg);
  const bool conserved = rec.max_mass_defect() <= 1e-12 && rec.min_density() >= -1e-12;
  spdlog::info("{} steps, max mass defect {:.2e}, min density {:.3e}", rec.steps.size(),
               rec.max_mass_defect(), rec.min_density());
  const fs::path path = resolve(g, out);
  write_trajectory_csv(path, rec);
  m.payoff = f.to_json();
  m.grid = eq.mu_star.size();
  m.parameters = {{"dt", dt}, {"t_end", t_end}, {"stride", stride}, {"cfl_safety", cfl},
                  {"init", init_json}};
  m.tolerances = {{"mass_defect", 1e-12}, {"min_density", -1e-12}};
  m.outputs = {path.string()};
  m.finish(start);
  write_sidecar(path, {{"manifest", m.to_json()},
                       {"max_mass_defect", rec.max_mass_defect()},
                       {"min_density_before_clip", rec.min_density()},
                       {"steps", rec.steps.size()},
                       {"passed", conserved}});
  return conserved ? 0 : 1;
}

int cmd_particles(const Globals& g, const std::string& payoff_path, std::size_t n, double dt,
                  double t_end, std::uint64_t seed, int stride, const std::string& init,
                  bool no_noise, const std::string& drift, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("particles");
  const Payoff f = Payoff::from_json(read_json(payoff_path));
  const PeriodicGrid grid(g.grid);
  const json init_json = init.empty() ? json{{"kind", "uniform"}} : load_json_arg(init);
  std::optional<EquilibriumPair> eq;
  std::optional<SpectralResult> sr;
  if (init_json.value("kind", "") == "perturbed_mne") {
    eq = solve_equilibrium(f, grid);
    sr = spectral_gap(*eq, f);
  } else {
    eq = make_equilibrium_pair(f, Density::uniform(grid), Density::uniform(grid), 0.0);
  }
  const auto [mu0, nu0] = make_initial(init_json, *eq, sr ? &*sr : nullptr);
  ParticleEnsemble ens =
      make_ensemble(sample_density(mu0, n, seed, 0), sample_density(nu0, n, seed, 1), seed, dt);
  ParticleOptions po;
  po.noise = !no_noise;
  po.threads = g.threads;
  po.method = drift == "moments" ? DriftMethod::Moments : DriftMethod::Deposition;

  const fs::path path = resolve(g, out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream csv(path);
  if (!csv) throw Error("cannot write " + path.string());
  csv.precision(17);
  csv << "t,particle,x,y\n";
  auto dump = [&] {
    for (std::size_t p = 0; p < ens.size(); ++p) {
      csv << ens.time() << ',' << p << ',' << ens.x[p] << ',' << ens.y[p] << '\n';
    }
  };
  dump();
  const auto steps = static_cast<std::uint64_t>(std::llround(t_end / dt));
  for (std::uint64_t s = 1; s <= steps; ++s) {
    ens = particle_step(std::move(ens), f, grid, po);
    if (s % static_cast<std::uint64_t>(stride) == 0 || s == steps) dump();
  }
  spdlog::info("{} particles advanced {} steps to t = {}", n, steps, ens.time());
  m.payoff = f.to_json();
  m.grid = g.grid;
  m.seeds = {seed};
  m.parameters = {{"n", n}, {"dt", dt}, {"t_end", t_end}, {"stride", stride}, {"init", init_json},
                  {"noise", !no_noise}, {"drift", drift}};
  m.outputs = {path.string()};
  m.finish(start);
  write_sidecar(path, {{"manifest", m.to_json()}});
  return 0;
}

int cmd_metrics(const Globals& g, const std::string& traj, const std::string& eq_path,
                const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("metrics");
  Payoff f;
  const EquilibriumPair eq = equilibrium_from_json(read_json(eq_path), &f);
  const TrajectoryRecord rec = read_trajectory_csv(traj);
  if (!(rec.mu.front().grid() == eq.mu_star.grid())) {
    throw InvalidArgument("metrics: trajectory and equilibrium grids differ");
  }
  const auto rows = trajectory_metrics(f, rec, eq.mu_star, eq.nu_star, g.threads);
  const fs::path path = resolve(g, out);
  write_metrics_csv(path, rows);
  m.payoff = f.to_json();
  m.grid = eq.mu_star.size();
  m.parameters = {{"traj", traj}, {"eq", eq_path}};
  m.outputs = {path.string()};
  m.finish(start);
  write_sidecar(path, {{"manifest", m.to_json()}});
  return 0;
}

int cmd_fit(const Globals& g, const std::string& metrics, double t_a, std::optional<double> t_b,
            const std::string& gap_path, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m = RunManifest::begin("fit-rate");
  const auto rows = read_metrics_csv(metrics);
  const auto window = default_fit_window(rows, t_a);
  json j;
  bool ok = true;
  try {
    const RateFit fit = fit_rate(rows, t_a, t_b.value_or(window.second));
    j = fit.to_json();
    spdlog::info("lambda_hat = {:.6f}, r^2 = {:.8f} on [{}, {}] ({} points)", fit.lambda_hat,
                 fit.r_squared, fit.t_a, fit.t_b, fit.n_points);
    if (!gap_path.empty()) {
      const double gap = read_json(gap_path).at("lambda_gap").get<double>();
      j["lambda_gap"] = gap;
      j["ratio"] = fit.lambda_hat / gap;
      j["within_10_percent"] = std::abs(fit.lambda_hat / gap - 1.0) <= 0.1;
      ok = j["within_10_percent"].get<bool>();
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    j["error"] = e.what();
    ok = false;
  }
  j["passed"] = ok;
  const fs::path path = resolve(g, out);
  m.parameters = {{"metrics", metrics}, {"t_a", t_a}};
  m.outputs = {path.string()};
  m.finish(start);
  j["manifest"] = m.to_json();
  write_json(path, j);
  return ok ? 0 : 1;
}

int cmd_report(const Globals& g, const std::string& payoff_path, const std::string& experiment,
               const std::vector<double>& eps, double dt, double t_end, int stride,
               std::vector<std::uint64_t> seeds, bool far_start, const std::string& out) {
  const Payoff f = payoff_path.empty() ? Payoff() : Payoff::from_json(read_json(payoff_path));
  json report;
  if (experiment == "local-stability") {
    StabilityOptions o;
    o.epsilons = eps;
    o.dt = dt;
    o.t_end = t_end;
    o.stride = stride;
    o.threads = g.threads;
    o.far_start = far_start;
    if (!seeds.empty()) o.seed = seeds.front();
    report = experiment_local_stability(f, g.grid, o);
  } else {
    ParticleConsistencyOptions o;
    o.threads = g.threads;
    if (!seeds.empty()) o.seeds = seeds;
    report = experiment_particle_consistency(f, g.grid, o);
  }
  const fs::path path = resolve(g, out);
  report["manifest"]["outputs"] = {path.string()};
  write_json(path, report);
  const bool ok = report.at("passed").get<bool>();
  if (ok) {
    spdlog::info("{}: all checks passed", experiment);
  } else {
    spdlog::error("{}: checks failed, see {}", experiment, path.string());
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibria, spectral gaps and descent-ascent dynamics of entropic games on the circle"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--grid", g.grid, "Grid points N")->check(CLI::Range(8, 1 << 20));
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  int rc = 0;

  auto* eq = app.add_subcommand("equilibrium", "Solve and certify the mixed Nash equilibrium");
  std::string eq_payoff, eq_out = "eq.json";
  double eq_tol = 1e-12, eq_damping = 0.5;
  int eq_max_iter = 100000;
  eq->add_option("--payoff", eq_payoff, "Payoff JSON")->required()->check(CLI::ExistingFile);
  eq->add_option("--tol", eq_tol, "Residual tolerance")->check(CLI::Range(1e-14, 1.0));
  eq->add_option("--damping", eq_damping, "Damping in (0, 1]")->check(CLI::Range(1e-6, 1.0));
  eq->add_option("--max-iter", eq_max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  eq->add_option("--out", eq_out, "Output JSON");
  eq->callback([&] { rc = cmd_equilibrium(g, eq_payoff, eq_tol, eq_damping, eq_max_iter, eq_out); });

  auto* gap = app.add_subcommand("gap", "Spectral gap at a certified equilibrium");
  std::string gap_eq, gap_out = "gap.json";
  gap->add_option("--eq", gap_eq, "Equilibrium JSON")->required()->check(CLI::ExistingFile);
  gap->add_option("--out", gap_out, "Output JSON");
  gap->callback([&] { rc = cmd_gap(g, gap_eq, gap_out); });

  auto* ev = app.add_subcommand("evolve", "Integrate the descent-ascent PDE");
  std::string ev_eq, ev_payoff, ev_init, ev_out = "traj.csv";
  double ev_dt = 1e-4, ev_t_end = 1.0, ev_cfl = 0.5;
  int ev_stride = 100;
  ev->add_option("--eq", ev_eq, "Equilibrium JSON (reference and grid)")->required()->check(CLI::ExistingFile);
  ev->add_option("--payoff", ev_payoff, "Payoff JSON (defaults to the one in --eq)");
  ev->add_option("--init", ev_init, "Initial condition: JSON file or inline JSON");
  ev->add_option("--dt", ev_dt, "Time step")->check(CLI::PositiveNumber);
  ev->add_option("--t-end", ev_t_end, "Final time")->check(CLI::PositiveNumber);
  ev->add_option("--stride", ev_stride, "Steps between snapshots")->check(CLI::PositiveNumber);
  ev->add_option("--cfl", ev_cfl, "CFL safety factor")->check(CLI::Range(1e-6, 1.0));
  ev->add_option("--out", ev_out, "Trajectory CSV");
  ev->callback([&] {
    rc = cmd_evolve(g, ev_eq, ev_payoff, ev_init, ev_dt, ev_t_end, ev_stride, ev_cfl, ev_out);
  });

  auto* pa = app.add_subcommand("particles", "Simulate the interacting particle system");
  std::string pa_payoff, pa_init, pa_drift = "deposition", pa_out = "particles.csv";
  std::size_t pa_n = 10000;
  double pa_dt = 1e-3, pa_t_end = 1.0;
  std::uint64_t pa_seed = 42;
  int pa_stride = 100;
  bool pa_no_noise = false;
  pa->add_option("--payoff", pa_payoff, "Payoff JSON")->required()->check(CLI::ExistingFile);
  pa->add_option("--n", pa_n, "Particles per player")->check(CLI::PositiveNumber);
  pa->add_option("--dt", pa_dt, "Time step")->check(CLI::PositiveNumber);
  pa->add_option("--t-end", pa_t_end, "Final time")->check(CLI::PositiveNumber);
  pa->add_option("--seed", pa_seed, "Random seed");
  pa->add_option("--stride", pa_stride, "Steps between snapshots")->check(CLI::PositiveNumber);
  pa->add_option("--init", pa_init, "Initial condition (default uniform)");
  pa->add_flag("--no-noise", pa_no_noise, "Deterministic drift only");
  pa->add_option("--drift", pa_drift, "deposition or moments")
      ->check(CLI::IsMember({"deposition", "moments"}));
  pa->add_option("--out", pa_out, "Particle CSV");
  pa->callback([&] {
    rc = cmd_particles(g, pa_payoff, pa_n, pa_dt, pa_t_end, pa_seed, pa_stride, pa_init,
                       pa_no_noise, pa_drift, pa_out);
  });

  auto* me = app.add_subcommand("metrics", "W2, KL and NI along a trajectory");
  std::string me_traj, me_eq, me_out = "metrics.csv";
  me->add_option("--traj", me_traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  me->add_option("--eq", me_eq, "Equilibrium JSON")->required()->check(CLI::ExistingFile);
  me->add_option("--out", me_out, "Metrics CSV");
  me->callback([&] { rc = cmd_metrics(g, me_traj, me_eq, me_out); });

  auto* fr = app.add_subcommand("fit-rate", "Exponential rate of the W2 energy");
  std::string fr_metrics, fr_gap, fr_out = "fit.json";
  double fr_t_a = 0.1;
  std::optional<double> fr_t_b;
  fr->add_option("--metrics", fr_metrics, "Metrics CSV")->required()->check(CLI::ExistingFile);
  fr->add_option("--t-a", fr_t_a, "Window start");
  fr->add_option("--t-b", fr_t_b, "Window end (default: last sample above the noise floor)");
  fr->add_option("--gap", fr_gap, "gap.json to compare against")->check(CLI::ExistingFile);
  fr->add_option("--out", fr_out, "Output JSON");
  fr->callback([&] { rc = cmd_fit(g, fr_metrics, fr_t_a, fr_t_b, fr_gap, fr_out); });

  auto* re = app.add_subcommand("report", "Run an experiment pipeline and write its report");
  std::string re_payoff, re_experiment = "local-stability", re_out = "report.json";
  std::vector<double> re_eps{0.01};
  double re_dt = 1e-4, re_t_end = 1.0;
  int re_stride = 100;
  std::vector<std::uint64_t> re_seeds;
  bool re_far = false;
  re->add_option("--payoff", re_payoff, "Payoff JSON (default f = 0)")->check(CLI::ExistingFile);
  re->add_option("--experiment", re_experiment, "local-stability or particle-consistency")
      ->check(CLI::IsMember({"local-stability", "particle-consistency"}));
  re->add_option("--eps", re_eps, "Perturbation sizes")->delimiter(',');
  re->add_option("--dt", re_dt, "PDE time step")->check(CLI::PositiveNumber);
  re->add_option("--t-end", re_t_end, "PDE horizon")->check(CLI::PositiveNumber);
  re->add_option("--stride", re_stride, "Steps between snapshots")->check(CLI::PositiveNumber);
  re->add_option("--seeds", re_seeds, "Seeds")->delimiter(',');
  re->add_flag("--far-start", re_far, "Also record an unasserted far-from-equilibrium run");
  re->add_option("--out", re_out, "Report JSON");
  re->callback([&] {
    rc = cmd_report(g, re_payoff, re_experiment, re_eps, re_dt, re_t_end, re_stride, re_seeds,
                    re_far, re_out);
  });

  app.parse_complete_callback([&] { spdlog::set_level(spdlog::level::from_str(g.log_level)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return rc;
}
