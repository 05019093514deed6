#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace mflda {

/// Counter-based normal variates: the value depends only on (seed, step,
/// index, stream), so results do not depend on evaluation order.
double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                      std::uint64_t stream);
/// Uniform on [0, 1) from the same counter hash.
double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                       std::uint64_t stream);

struct ParticleEnsemble {
  std::vector<double> x;  // torus coordinates in [0, 1)
  std::vector<double> y;
  // Accumulated (unwrapped) displacement since construction.
  std::vector<double> lift_x;
  std::vector<double> lift_y;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  std::uint64_t step = 0;

  std::size_t size() const { return x.size(); }
  double time() const { return dt * static_cast<double>(step); }
};

ParticleEnsemble make_ensemble(std::vector<double> x, std::vector<double> y, std::uint64_t seed,
                               double dt);

/// n i.i.d. samples of a grid density by inverse-CDF sampling with the
/// counter generator (stream distinguishes players).
std::vector<double> sample_density(const Density& rho, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream);

/// n deterministic points at the quantiles (i + 1/2)/n of a grid density.
std::vector<double> quantile_points(const Density& rho, std::size_t n);

enum class DriftMethod {
  Deposition,  // cloud-in-cell deposition on the grid, deconvolved
  Moments,     // exact per-term Fourier moments over the particles
};

struct Drift {
  std::vector<double> bx;  // -V_nu'(X)
  std::vector<double> cy;  // +U_mu'(Y)
};

/// Drift of both players for the empirical measures of the ensemble.
Drift particle_drift(const ParticleEnsemble& ens, const Payoff& f, const PeriodicGrid& grid,
                     DriftMethod method = DriftMethod::Deposition);

/// Fourier moment int exp(2 pi i freq y) d(empirical) recovered from the
/// cloud-in-cell deposit on the grid with the sinc^2 factor divided out.
std::vector<std::complex<double>> deposited_moments(std::span<const double> samples,
                                                    const PeriodicGrid& grid,
                                                    std::span<const int> freqs);

struct ParticleOptions {
  bool noise = true;
  DriftMethod method = DriftMethod::Deposition;
  unsigned threads = 1;
};

/// One Euler-Maruyama step X <- X + b dt + sqrt(2 dt) xi (mod 1), same for Y
/// with drift c.
ParticleEnsemble particle_step(ParticleEnsemble ens, const Payoff& f, const PeriodicGrid& grid,
                               const ParticleOptions& options = {});

/// Normalized histogram on the grid cells [x_j, x_j + h).
Density histogram(std::span<const double> samples, const PeriodicGrid& grid);

}  // namespace mflda
