#pragma once

#include <json.hpp>

#include "mflda/equilibrium.hpp"
#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace mflda {

class EigenNotConverged : public Error {
 public:
  EigenNotConverged(int iterations, double last_change, double residual);
  int iterations;
  double last_change;
  double residual;
};

class GibbsMismatch : public Error {
 public:
  explicit GibbsMismatch(double defect);
  double defect;
};

struct GapEstimate {
  double lambda = 0.0;
  GridFunction eigenfunction{PeriodicGrid(PeriodicGrid::kMinPoints)};
  // ||K phi - lambda M phi|| in the M^{-1} norm, phi M-normalized.
  double residual = 0.0;
  int iterations = 0;
};

/// First nonzero eigenvalue of -rho^{-1}(rho phi')' from the second-order
/// finite-difference Dirichlet form with midpoint weights. The eigenfunction
/// is normalized so that int phi^2 rho = 1.
GapEstimate generator_gap(const Density& rho);

/// Richardson extrapolation of generator_gap over the grids N, 2N, ..., 2^{levels-1} N,
/// with rho carried to the finer grids by trigonometric interpolation.
double generator_gap_extrapolated(const Density& rho, int levels = 3);

/// inf int (phi''^2 + V'' phi'^2) rho / int phi'^2 rho over trigonometric
/// polynomials of degree < N/2 without constant term. Requires
/// rho = gibbs(-V) to 1e-8 in max norm. The optimizer is normalized so that
/// int phi'^2 rho = 1.
GapEstimate rayleigh_gap(const Density& rho, const GridFunction& V);

/// Rayleigh quotient of the fourth-order form at a given direction.
double rayleigh_quotient(const Density& rho, const GridFunction& V, const GridFunction& phi);

struct SpectralResult {
  double lambda_x = 0.0;
  double lambda_y = 0.0;
  double lambda_gap = 0.0;
  double lambda_x_rayleigh = 0.0;
  double lambda_y_rayleigh = 0.0;
  double lambda_x_generator_raw = 0.0;
  double lambda_y_generator_raw = 0.0;
  double holley_stroock_bound = 0.0;
  double residual_x = 0.0;
  double residual_y = 0.0;
  GridFunction eigenfunction_x{PeriodicGrid(PeriodicGrid::kMinPoints)};
  GridFunction eigenfunction_y{PeriodicGrid(PeriodicGrid::kMinPoints)};

  nlohmann::json to_json(bool with_eigenfunctions = true) const;
};

/// Both routes for both players at a certified equilibrium. The x-side
/// potential is V_{nu*}; the y-side Gibbs potential is -U_{mu*}.
SpectralResult spectral_gap(const EquilibriumPair& eq, const Payoff& f);

}  // namespace mflda
