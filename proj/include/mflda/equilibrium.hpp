#pragma once

#include <json.hpp>

#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace mflda {

class NotConverged : public Error {
 public:
  NotConverged(double residual_mu, double residual_nu, int iterations);
  double residual_mu;
  double residual_nu;
  int iterations;
};

class CertificationFailed : public Error {
 public:
  CertificationFailed(const std::string& quantity, double value, double limit);
  std::string quantity;
  double value;
  double limit;
};

/// Gibbs map w -> e^w / int e^w, evaluated with a max shift.
Density gibbs(const GridFunction& w);

struct EquilibriumPair {
  Density mu_star;
  Density nu_star;
  GridFunction V_star;  // V_{nu*} on the x grid
  GridFunction U_star;  // U_{mu*} on the y grid
  double residual_mu = 0.0;
  double residual_nu = 0.0;
  int iterations = 0;
  double tol = 0.0;
};

struct SolveOptions {
  double damping = 0.5;
  double tol = 1e-12;
  int max_iter = 100000;
};

/// Max-norm fixed-point defects |mu - gibbs(-V_nu)| and |nu - gibbs(+U_mu)|.
std::pair<double, double> fixed_point_residuals(const Payoff& f, const Density& mu,
                                                const Density& nu);

/// Damped simultaneous best response from the uniform pair:
///   mu <- (1 - g) mu + g gibbs(-V_nu),  nu <- (1 - g) nu + g gibbs(+U_mu).
/// Throws NotConverged after max_iter updates.
EquilibriumPair solve_mne(const Payoff& f, const PeriodicGrid& grid,
                          const SolveOptions& options = {});

/// Same iteration started from a given pair instead of the uniform one.
EquilibriumPair solve_mne(const Payoff& f, Density mu0, Density nu0,
                          const SolveOptions& options = {});

/// Wraps an externally obtained pair (e.g. a long PDE run) with freshly
/// computed potentials and residuals.
EquilibriumPair make_equilibrium_pair(const Payoff& f, Density mu, Density nu, double tol,
                                      int iterations = 0);

struct CertificateReport {
  double residual_mu = 0.0;
  double residual_nu = 0.0;
  double ni = 0.0;
  double tol = 0.0;

  nlohmann::json to_json() const;
};

/// Recomputes residuals and NI; throws CertificationFailed unless both
/// residuals are <= tol and NI <= 10 tol.
CertificateReport certify(const EquilibriumPair& pair, const Payoff& f);

}  // namespace mflda
