#include "mflda/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "mflda/fft.hpp"
#include "mflda/interpolation.hpp"

namespace mflda {

namespace {

constexpr std::uint64_t kInitStep = ~std::uint64_t{0};

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                          std::uint64_t stream) {
  return splitmix(seed ^ splitmix(step ^ splitmix(index ^ splitmix(stream))));
}

// 53-bit mantissa in (0, 1] or [0, 1).
double to_open_unit(std::uint64_t bits) { return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53; }
double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double wrap(double x) {
  double w = x - std::floor(x);
  return w >= 1.0 ? 0.0 : w;
}

// Runs body(begin, end) over [0, n) split into contiguous chunks.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n / 1024 + 1)));
  if (t == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + t - 1) / t;
  for (unsigned i = 0; i < t; ++i) {
    const std::size_t b = i * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([=] { body(b, e); });
  }
}

std::vector<int> unique_freqs(const Payoff& f, bool x_side) {
  std::vector<int> out;
  for (const auto& t : f.terms()) out.push_back(x_side ? t.k : t.l);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MomentFn lookup(std::vector<int> freqs, std::vector<std::complex<double>> moments) {
  return [freqs = std::move(freqs), moments = std::move(moments)](int l) {
    const auto it = std::lower_bound(freqs.begin(), freqs.end(), l);
    return moments[static_cast<std::size_t>(it - freqs.begin())];
  };
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                       std::uint64_t stream) {
  return to_unit(counter_key(seed, step, index, stream));
}

double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                      std::uint64_t stream) {
  const std::uint64_t k = counter_key(seed, step, index, stream);
  const double u1 = to_open_unit(k);
  const double u2 = to_unit(splitmix(k));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ParticleEnsemble make_ensemble(std::vector<double> x, std::vector<double> y, std::uint64_t seed,
                               double dt) {
  if (x.empty() || x.size() != y.size()) {
    throw InvalidArgument("make_ensemble: need equally many (>0) particles per player");
  }
  if (!(dt > 0.0)) throw InvalidArgument("make_ensemble: dt must be positive");
  ParticleEnsemble e;
  for (double& v : x) v = wrap(v);
  for (double& v : y) v = wrap(v);
  e.lift_x.assign(x.size(), 0.0);
  e.lift_y.assign(y.size(), 0.0);
  e.x = std::move(x);
  e.y = std::move(y);
  e.seed = seed;
  e.dt = dt;
  return e;
}

std::vector<double> sample_density(const Density& rho, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream) {
  const PiecewiseLinearCdf cdf(rho.values());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = wrap(cdf.quantile(counter_uniform(seed, kInitStep, i, stream)));
  }
  return out;
}

std::vector<double> quantile_points(const Density& rho, std::size_t n) {
  const PiecewiseLinearCdf cdf(rho.values());
  std::vector<double> out(n);
  std::size_t cell = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = wrap(cdf.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n), cell));
  }
  return out;
}

std::vector<std::complex<double>> deposited_moments(std::span<const double> samples,
                                                    const PeriodicGrid& grid,
                                                    std::span<const int> freqs) {
  const std::size_t n = grid.size();
  std::vector<double> w(n, 0.0);
  for (double y : samples) {
    const double s = wrap(y) * static_cast<double>(n);
    const double j = std::floor(s);
    const double frac = s - j;
    const auto i = static_cast<std::size_t>(j) % n;
    w[i] += 1.0 - frac;
    w[(i + 1) % n] += frac;
  }
  const auto c = fft::forward(w);
  const double inv = 1.0 / static_cast<double>(samples.size());
  std::vector<std::complex<double>> out;
  out.reserve(freqs.size());
  for (int l : freqs) {
    if (l == 0) {
      out.emplace_back(1.0);
      continue;
    }
    const auto k = static_cast<std::size_t>(std::abs(l));
    if (2 * k >= n) throw InvalidArgument("deposited_moments: frequency not resolved by the grid");
    const double a = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    const double sinc = std::sin(a) / a;
    const std::complex<double> m = l > 0 ? std::conj(c[k]) : c[k];
    out.push_back(m * inv / (sinc * sinc));
  }
  return out;
}

Drift particle_drift(const ParticleEnsemble& ens, const Payoff& f, const PeriodicGrid& grid,
                     DriftMethod method) {
  std::vector<int> ly = unique_freqs(f, false);
  std::vector<int> kx = unique_freqs(f, true);
  std::vector<std::complex<double>> my, mx;
  if (method == DriftMethod::Deposition) {
    my = deposited_moments(ens.y, grid, ly);
    mx = deposited_moments(ens.x, grid, kx);
  } else {
    for (int l : ly) my.push_back(fourier_moment(ens.y, l));
    for (int k : kx) mx.push_back(fourier_moment(ens.x, k));
  }
  const TrigSeries V = potential_x_from_moments(f, lookup(std::move(ly), std::move(my)));
  const TrigSeries U = potential_y_from_moments(f, lookup(std::move(kx), std::move(mx)));
  Drift d;
  d.bx.resize(ens.size());
  d.cy.resize(ens.size());
  for (std::size_t p = 0; p < ens.size(); ++p) {
    d.bx[p] = -V.derivative(ens.x[p], 1);
    d.cy[p] = U.derivative(ens.y[p], 1);
  }
  return d;
}

ParticleEnsemble particle_step(ParticleEnsemble ens, const Payoff& f, const PeriodicGrid& grid,
                               const ParticleOptions& options) {
  const Drift d = f.is_zero() ? Drift{std::vector<double>(ens.size(), 0.0),
                                      std::vector<double>(ens.size(), 0.0)}
                              : particle_drift(ens, f, grid, options.method);
  const double dt = ens.dt;
  const double amp = std::sqrt(2.0 * dt);
  const std::uint64_t step = ens.step;
  parallel_for(ens.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double dx = d.bx[p] * dt;
      double dy = d.cy[p] * dt;
      if (options.noise) {
        dx += amp * counter_normal(ens.seed, step, p, 0);
        dy += amp * counter_normal(ens.seed, step, p, 1);
      }
      ens.lift_x[p] += dx;
      ens.lift_y[p] += dy;
      ens.x[p] = wrap(ens.x[p] + dx);
      ens.y[p] = wrap(ens.y[p] + dy);
    }
  });
  ++ens.step;
  return ens;
}

Density histogram(std::span<const double> samples, const PeriodicGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> counts(n, 0.0);
  for (double x : samples) {
    auto j = static_cast<std::size_t>(wrap(x) * static_cast<double>(n));
    counts[std::min(j, n - 1)] += 1.0;
  }
  return Density(grid, std::move(counts));
}

}  // namespace mflda
