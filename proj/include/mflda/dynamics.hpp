#pragma once

#include <functional>
#include <vector>

#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace mflda {

class StepUnstable : public Error {
 public:
  StepUnstable(double t, double dt, double min_value);
  double t;
  double dt;
  double min_value;
};

struct EvolverConfig {
  double dt = 1e-4;
  double t_end = 1.0;
  int snapshot_stride = 100;
  double cfl_safety = 0.5;
  int max_halvings = 20;
};

/// Per-step bookkeeping. Masses and minima are taken before clipping and
/// renormalization.
struct StepDiagnostics {
  double t = 0.0;  // time at the end of the step
  double dt = 0.0;
  int substeps = 1;
  int halvings = 0;
  double mass_defect = 0.0;  // max over substeps and both players of |h sum - 1|
  double min_density = 0.0;  // min over substeps and both players
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Density> mu;
  std::vector<Density> nu;
  std::vector<StepDiagnostics> steps;

  double max_mass_defect() const;
  double min_density() const;
};

/// One exponential-Euler substep of
///   d mu = mu'' + (mu V_nu')',   d nu = nu'' - (nu U_mu')'
/// with exact diffusion and the dealiased (2/3 rule) drift divergence held
/// fixed over the step. Returns the raw grid values (no clipping).
struct RawState {
  std::vector<double> mu;
  std::vector<double> nu;
};
RawState etd_substep(const Density& mu, const Density& nu, const Payoff& f, double dt);

struct StepResult {
  Density mu;
  Density nu;
  StepDiagnostics diagnostics;
};

/// Advances (mu, nu) by dt. The step is split into substeps satisfying the
/// drift CFL bound; if a substep produces values below -1e-12 the substep
/// count is doubled and the whole step retried, up to max_halvings times.
StepResult pde_step(const Density& mu, const Density& nu, const Payoff& f, double dt,
                    double cfl_safety = 0.5, int max_halvings = 20);

/// Largest drift-stable step cfl_safety * h / max(|V'|, |U'|, 1e-12).
double cfl_limit(const Density& mu, const Density& nu, const Payoff& f, double cfl_safety);

/// Repeated pde_step from t = 0 to t_end. Snapshots at t = 0, every
/// snapshot_stride steps, and at t_end exactly (the last step is shortened
/// when dt does not divide t_end).
TrajectoryRecord evolve(const Density& mu0, const Density& nu0, const Payoff& f,
                        const EvolverConfig& cfg);

/// Drift velocity residual max |(log mu + V_nu)'| and max |(log nu - U_mu)'|.
double stationarity_defect(const Density& mu, const Density& nu, const Payoff& f);

}  // namespace mflda
