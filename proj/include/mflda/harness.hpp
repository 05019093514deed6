#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflda/dynamics.hpp"
#include "mflda/equilibrium.hpp"
#include "mflda/geometry.hpp"
#include "mflda/payoff.hpp"
#include "mflda/pool.hpp"
#include "mflda/spectral.hpp"

namespace mflda {

inline constexpr const char* kVersion = "0.1.0";

class InsufficientData : public Error {
 public:
  InsufficientData(std::size_t have, std::size_t need);
};

class NonPositiveEnergy : public Error {
 public:
  NonPositiveEnergy(double t, double energy);
};

// ---------------------------------------------------------------- rate fit

struct RateFit {
  double lambda_hat = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  double slope = 0.0;
  double intercept = 0.0;

  nlohmann::json to_json() const;
};

/// Samples with E below this are treated as quadrature noise.
inline constexpr double kEnergyFloor = 1e-18;

/// Least-squares fit of log E(t) over samples with t in [t_a, t_b] and
/// E >= kEnergyFloor; lambda_hat = -slope / 2. Needs at least 10 points.
RateFit fit_rate(const std::vector<MetricSample>& samples, double t_a, double t_b);

/// Default window [t_a, t_b]: t_b is the last sample time with
/// E >= 100 * kEnergyFloor.
std::pair<double, double> default_fit_window(const std::vector<MetricSample>& samples,
                                             double t_a = 0.1);

/// Largest increase E_{k+1} - E_k over consecutive samples with t_k >= t_from.
double max_energy_increase(const std::vector<MetricSample>& samples, double t_from);

// ---------------------------------------------------------------- manifest

struct RunManifest {
  std::string command;
  nlohmann::json payoff;
  std::size_t grid = 0;
  nlohmann::json tolerances = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::string started_at;
  double wall_clock_seconds = 0.0;

  static RunManifest begin(std::string command);
  void finish(std::chrono::steady_clock::time_point start);
  nlohmann::json to_json() const;
};

/// Library and dependency versions recorded in every manifest.
nlohmann::json artifact_versions();

// ---------------------------------------------------------------- pipeline pieces

struct MneSolveSettings {
  double tol = 1e-12;
  double damping = 0.5;
  int max_iter = 100000;
  int max_damping_halvings = 6;
  double fallback_t_end = 20.0;
};

/// solve_mne with damping halving on NotConverged, then a PDE run from the
/// uniform pair followed by damped iteration from its end state.
EquilibriumPair solve_equilibrium(const Payoff& f, const PeriodicGrid& grid,
                                  const MneSolveSettings& s = {});

nlohmann::json equilibrium_to_json(const EquilibriumPair& eq, const Payoff& f);
EquilibriumPair equilibrium_from_json(const nlohmann::json& j, Payoff* payoff = nullptr);

/// Initial pair from a JSON description:
///   {"kind":"uniform"}
///   {"kind":"gibbs","potential_terms":[{"a","k","theta"}...]}  (same for both players
///     unless "potential_terms_y" is given; density proportional to exp(-sum a cos(2 pi k x + theta)))
///   {"kind":"perturbed_mne","epsilon":e,"mode":m}  mode 0 or "direction":"eigen" uses the
///     spectral eigenfunctions, mode m >= 1 uses cos(2 pi m x);
///     mu0 = mu* (1 + e phi / max|phi|).
std::pair<Density, Density> make_initial(const nlohmann::json& init, const EquilibriumPair& eq,
                                         const SpectralResult* spectral);

/// mu (1 + eps phi / max|phi|), renormalized.
Density perturb_density(const Density& rho, const GridFunction& phi, double eps);

/// Smooth random direction sum_{m=1}^{4} (a_m cos + b_m sin)(2 pi m x) / m^2.
GridFunction random_direction(const PeriodicGrid& grid, std::uint64_t seed, std::uint64_t stream);

std::vector<MetricSample> trajectory_metrics(const Payoff& f, const TrajectoryRecord& rec,
                                             const Density& mu_ref, const Density& nu_ref,
                                             unsigned threads = 1);

struct EviReport {
  double max_violation_mu = 0.0;  // max of lhs - rhs
  double max_violation_nu = 0.0;
  std::size_t checked = 0;
};

/// Discrete EVI along snapshots with t >= t_from:
///   (W2^2_{k+1} - W2^2_k) / (2 dt) <= F(mu*, nu) - F(mu, nu) - lambda/2 W2^2(mu, mu*)
/// and the ascent counterpart for nu; right-hand sides averaged over the two ends.
EviReport evi_check(const Payoff& f, const TrajectoryRecord& rec,
                    const std::vector<MetricSample>& samples, const Density& mu_star,
                    const Density& nu_star, double lambda, double t_from = 0.1);

// ---------------------------------------------------------------- experiments

struct StabilityOptions {
  std::vector<double> epsilons{0.01};
  int random_directions = 3;
  double dt = 1e-4;
  double t_end = 1.0;
  int stride = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  bool far_start = false;
  MneSolveSettings mne;
};

/// solve -> gap -> perturb/evolve/measure/fit for every (eps, direction);
/// returns a JSON report with "passed" and per-run flags.
nlohmann::json experiment_local_stability(const Payoff& f, std::size_t n,
                                          const StabilityOptions& opt = {});

struct ParticleConsistencyOptions {
  std::vector<std::size_t> particle_counts{1000, 10000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double dt = 1e-3;
  double t_match = 0.5;
  std::size_t histogram_bins = 32;
  std::size_t variance_particles = 100000;
  double variance_time = 0.05;
  std::size_t drift_particles = 10000;
  nlohmann::json init = {{"kind", "gibbs"},
                         {"potential_terms", {{{"a", 1.0}, {"k", 1}, {"theta", 0.0}}}}};
  unsigned threads = 1;
};

nlohmann::json experiment_particle_consistency(const Payoff& f, std::size_t n,
                                               const ParticleConsistencyOptions& opt = {});

}  // namespace mflda
