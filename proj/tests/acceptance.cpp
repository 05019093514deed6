// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "mflda/equilibrium.hpp"
#include "mflda/geometry.hpp"
#include "mflda/harness.hpp"
#include "mflda/particles.hpp"
#include "mflda/spectral.hpp"
#include "support.hpp"

using namespace mflda;
using namespace testing;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Random payoffs with amplitudes <= 1 and frequencies <= 4 in absolute value.
std::vector<Payoff> payoff_suite(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Payoff> out;
  while (out.size() < count) {
    Payoff f = random_payoff(rng);
    if (!f.is_zero()) out.push_back(std::move(f));
  }
  return out;
}

Outcome flat_gap() {
  const auto eq = solve_mne(Payoff(), PeriodicGrid(256));
  const auto sr = spectral_gap(eq, Payoff());
  const double r = sr.lambda_gap / kFourPi2;
  return {r >= 0.999 && r <= 1.001, fmt("lambda_gap = %.10f, ratio to 4pi^2 = %.3e - 1", sr.lambda_gap, r - 1.0)};
}

struct SuiteResult {
  double worst_route = 0.0;
  double worst_hs_margin = 1e300;
  bool all_positive = true;
};

SuiteResult& suite() {
  static SuiteResult result = [] {
    SuiteResult s;
    for (const Payoff& f : payoff_suite(20, 2024)) {
      const auto eq = solve_equilibrium(f, PeriodicGrid(256));
      const auto sr = spectral_gap(eq, f);
      s.worst_route = std::max({s.worst_route, std::abs(sr.lambda_x / sr.lambda_x_rayleigh - 1.0),
                                std::abs(sr.lambda_y / sr.lambda_y_rayleigh - 1.0)});
      s.worst_hs_margin = std::min(s.worst_hs_margin, sr.lambda_gap / sr.holley_stroock_bound);
      s.all_positive = s.all_positive && sr.lambda_gap > 0.0;
    }
    return s;
  }();
  return result;
}

Outcome route_agreement() {
  const auto& s = suite();
  return {s.worst_route <= 1e-7, fmt("20 payoffs, worst relative route gap %.2e", s.worst_route)};
}

Outcome holley_stroock() {
  const auto& s = suite();
  return {s.all_positive && s.worst_hs_margin >= 1.0,
          fmt("smallest lambda_gap / (4pi^2 e^{-|f|}) = %.4f", s.worst_hs_margin)};
}

Outcome mne_certification() {
  const Payoff f = decoupled();
  const auto eq = solve_mne(f, PeriodicGrid(256));
  const PeriodicGrid g(256);
  double d = 0.0;
  for (std::size_t j = 0; j < 256; ++j) {
    d = std::max(d, std::abs(eq.mu_star[j] - std::exp(-std::cos(kTwoPi * g.node(j))) / kI0));
  }
  const double ni = ni_error(f, eq.mu_star, eq.nu_star);
  return {d <= 1e-10 && ni <= 1e-9, fmt("L-inf distance %.2e, NI %.2e, %d iterations", d, ni, eq.iterations)};
}

nlohmann::json& stability_report() {
  static nlohmann::json r = [] {
    StabilityOptions o;  // eps = 0.01, dt = 1e-4, t_end = 1, eigen + 3 random directions
    return experiment_local_stability(decoupled(), 256, o);
  }();
  return r;
}

nlohmann::json& coupled_stability_report() {
  static nlohmann::json r = [] {
    StabilityOptions o;
    o.random_directions = 2;
    o.t_end = 0.6;
    return experiment_local_stability(Payoff({{0.8, 1, 1, 0.3}, {0.4, 2, -1, 0.0}}), 128, o);
  }();
  return r;
}

Outcome rate_reproduction() {
  const auto& r = stability_report();
  if (!r.contains("runs")) return {false, "pipeline error: " + r.value("error", std::string("?"))};
  const auto& eigen = r.at("runs").at(0);
  if (!eigen.contains("fit")) return {false, "fit failed: " + eigen.value("fit_error", std::string("?"))};
  const double ratio = eigen.at("lambda_hat_over_gap").get<double>();
  const double r2 = eigen.at("fit").at("r_squared").get<double>();
  return {std::abs(ratio - 1.0) <= 0.1 && r2 >= 0.999,
          fmt("lambda_hat = %.4f, lambda_gap = %.4f, ratio %.5f, r^2 = %.10f",
              eigen.at("fit").at("lambda_hat").get<double>(),
              r.at("spectral").at("lambda_gap").get<double>(), ratio, r2)};
}

Outcome lyapunov() {
  bool ok = true;
  double worst_increase = -1e300, worst_evi = -1e300;
  std::size_t runs = 0;
  for (const auto* r : {&stability_report(), &coupled_stability_report()}) {
    if (!r->contains("runs")) return {false, "pipeline error"};
    for (const auto& run : r->at("runs")) {
      ++runs;
      ok = ok && run.at("monotone").at("passed").get<bool>() && run.at("evi").at("passed").get<bool>();
      worst_increase = std::max(worst_increase, run.at("monotone").at("max_increase_after_0.1").get<double>());
      worst_evi = std::max({worst_evi, run.at("evi").at("max_violation_mu").get<double>(),
                            run.at("evi").at("max_violation_nu").get<double>()});
    }
  }
  return {ok, fmt("%zu runs, largest E increase %.2e, largest EVI excess %.2e", runs, worst_increase, worst_evi)};
}

Outcome inequality_chain() {
  std::mt19937_64 rng(7);
  double worst = -1e300;
  for (const Payoff& f : payoff_suite(10, 77)) {
    const auto eq = solve_equilibrium(f, PeriodicGrid(128));
    for (int i = 0; i < 20; ++i) {
      const auto mu = random_density(128, rng, 0.8);
      const auto nu = random_density(128, rng, 0.8);
      worst = std::max(worst, kl(mu, eq.mu_star) + kl(nu, eq.nu_star) - ni_error(f, mu, nu));
    }
  }
  return {worst <= 1e-9, fmt("200 pairs, max of KL sum - NI = %.3e", worst)};
}

Outcome ni_closed_form() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  const auto fs = payoff_suite(50, 88);
  for (const Payoff& f : fs) {
    const auto mu = random_density(256, rng, 0.8);
    const auto nu = random_density(256, rng, 0.8);
    const auto p = induced_potentials(f, mu, nu);
    auto minus_v = p.V;
    for (double& v : minus_v.values()) v = -v;
    const double def = saddle_value(f, mu, gibbs(p.U)) - saddle_value(f, gibbs(minus_v), nu);
    worst = std::max(worst, std::abs(ni_error(f, mu, nu) - def));
  }
  return {worst <= 1e-10, fmt("50 pairs, max |closed form - definition| = %.2e", worst)};
}

Outcome w2_equivalence() {
  std::mt19937_64 rng(9);
  double worst_ratio = 0.0, worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = (i % 3 == 0) ? 32 : 64;
    const auto a = random_density(n, rng, 1.5);
    const auto b = random_density(n, rng, 1.5);
    const double tol = std::max(1e-3, 2.0 / static_cast<double>(n));
    const double d = std::abs(w2_circle(a, b) - w2_oracle(a, b));
    worst = std::max(worst, d);
    worst_ratio = std::max(worst_ratio, d / tol);
  }
  return {worst_ratio <= 1.0, fmt("50 pairs, max |quantile - exact| = %.2e (%.0f%% of tolerance)", worst,
                                  100.0 * worst_ratio)};
}

Outcome variation_checks() {
  std::mt19937_64 rng(10);
  const auto fs = payoff_suite(10, 99);
  double lo = 1e300, hi = -1e300, worst_gap = 0.0;
  for (const Payoff& f : fs) {
    const auto mu = random_density(256, rng);
    const auto nu = random_density(256, rng);
    const VariationDirection dir(random_phi(256, rng));
    const auto f1 = first_variation_check(f, mu, nu, dir, 1e-2);
    const auto f2 = first_variation_check(f, mu, nu, dir, 5e-3);
    const auto s1 = second_variation(f, mu, nu, dir, 1e-2);
    const auto s2 = second_variation(f, mu, nu, dir, 5e-3);
    for (double r : {f1.gap / f2.gap, s1.gap / s2.gap}) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    worst_gap = std::max({worst_gap, std::abs(f1.gap) / (std::abs(f1.analytic) + 1e-12),
                          std::abs(s1.gap) / (std::abs(s1.value) + 1e-12)});
  }
  return {lo >= 4.0 * 0.85 && hi <= 4.0 * 1.15,
          fmt("10 pairs, halving ratios in [%.3f, %.3f], largest relative FD gap %.2e", lo, hi, worst_gap)};
}

Outcome conservation() {
  double defect = 0.0, lowest = 1e300;
  std::size_t runs = 0;
  for (const auto* r : {&stability_report(), &coupled_stability_report()}) {
    if (!r->contains("runs")) return {false, "pipeline error"};
    for (const auto& run : r->at("runs")) {
      ++runs;
      defect = std::max(defect, run.at("conservation").at("max_mass_defect").get<double>());
      lowest = std::min(lowest, run.at("conservation").at("min_density_before_clip").get<double>());
    }
  }
  // Far-from-equilibrium starts with concentrated densities on random payoffs.
  std::mt19937_64 rng(11);
  for (const Payoff& f : payoff_suite(6, 111)) {
    const auto mu0 = random_density(128, rng, 2.5);
    const auto nu0 = random_density(128, rng, 2.5);
    const auto rec = evolve(mu0, nu0, f, {1e-3, 0.5, 100});
    ++runs;
    defect = std::max(defect, rec.max_mass_defect());
    lowest = std::min(lowest, rec.min_density());
  }
  return {defect <= 1e-12 && lowest >= -1e-12,
          fmt("%zu runs, max per-step mass defect %.2e, min density before clipping %.3e", runs, defect, lowest)};
}

Outcome particle_consistency() {
  const auto r = experiment_particle_consistency(Payoff(), 256);
  if (!r.contains("variance")) return {false, "pipeline error"};
  const auto& v = r.at("variance");
  const auto& k = r.at("kl_vs_pde");
  return {v.at("passed").get<bool>() && k.at("decreasing").get<bool>(),
          fmt("variance %.5f vs 0.1 (rel. err %.2e), median KL %.3e (1e3) -> %.3e (1e4)",
              v.at("var_x").get<double>(), v.at("relative_error").get<double>(),
              k.at("runs").at(0).at("median").get<double>(), k.at("runs").at(1).at("median").get<double>())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"flat-case gap", flat_gap, 1.0},
      {"route agreement", route_agreement, 30.0},
      {"holley-stroock bound", holley_stroock, 30.0},
      {"equilibrium certification", mne_certification, 1.0},
      {"rate reproduction", rate_reproduction, 120.0},
      {"lyapunov monotonicity and EVI", lyapunov, 120.0},
      {"KL-NI inequality chain", inequality_chain, 60.0},
      {"NI closed form vs definition", ni_closed_form, 60.0},
      {"W2 oracle equivalence", w2_equivalence, 60.0},
      {"variation formula gradient checks", variation_checks, 60.0},
      {"conservation", conservation, 120.0},
      {"particle consistency", particle_consistency, 60.0},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool ok = o.passed && in_budget;
    if (!ok) ++failures;
    std::printf("%s [%2d] %s: %s (%.2f s%s)\n", ok ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs,
                in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
