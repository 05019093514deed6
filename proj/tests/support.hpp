#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mflda/grid.hpp"
#include "mflda/payoff.hpp"

namespace testing {

// Frozen reference values (mpmath, 30 digits; scipy dense eigh).
inline constexpr double kI0 = 1.26606587775200833560;               // I_0(1)
inline constexpr double kI1 = 0.565159103992485027208;              // I_1(1)
inline constexpr double kGibbsAtZero = 0.290568956668067631772;     // e^{-1} / I_0(1)
inline constexpr double kGibbsEntropy = 0.210475607389355858358;    // I_1/I_0 - log I_0
inline constexpr double kTiltedProbeMin = -11.84352377254051;       // 2048^2 probe, 0.3 cos(2pi(x+y)+0.7)
inline constexpr double kDenseGeneratorGap512 = 46.0114079605379;   // FD pencil, rho ~ e^{-cos}, N = 512
inline constexpr double kDenseGeneratorGap256 = 46.00975552753641;
inline constexpr double kDenseFlatGap256 = 39.47643585112779;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

inline mflda::Density gibbs_cos(std::size_t n, double a = 1.0) {
  mflda::PeriodicGrid g(n);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = std::exp(-a * std::cos(kTwoPi * g.node(j)));
  return mflda::Density(g, std::move(v));
}

inline mflda::GridFunction sample(std::size_t n, auto fn) {
  mflda::PeriodicGrid g(n);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = fn(g.node(j));
  return mflda::GridFunction(g, std::move(v));
}

/// exp of a random trig polynomial of degree <= 4 with coefficients ~ amp.
inline mflda::Density random_density(std::size_t n, std::mt19937_64& rng, double amp = 0.5) {
  std::normal_distribution<double> z(0.0, amp);
  double a[5], b[5];
  for (int m = 1; m <= 4; ++m) {
    a[m] = z(rng) / m;
    b[m] = z(rng) / m;
  }
  mflda::PeriodicGrid g(n);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int m = 1; m <= 4; ++m) {
      s += a[m] * std::cos(kTwoPi * m * g.node(j)) + b[m] * std::sin(kTwoPi * m * g.node(j));
    }
    v[j] = std::exp(s);
  }
  return mflda::Density(g, std::move(v));
}

/// Random band-limited direction of degree <= 4.
inline mflda::GridFunction random_phi(std::size_t n, std::mt19937_64& rng, double amp = 0.02) {
  std::normal_distribution<double> z(0.0, amp);
  double a[5], b[5];
  for (int m = 1; m <= 4; ++m) {
    a[m] = z(rng) / (m * m);
    b[m] = z(rng) / (m * m);
  }
  return sample(n, [&](double x) {
    double s = 0.0;
    for (int m = 1; m <= 4; ++m) s += a[m] * std::cos(kTwoPi * m * x) + b[m] * std::sin(kTwoPi * m * x);
    return s;
  });
}

/// 1..4 terms, amplitudes in [-1, 1], frequencies in [-4, 4].
inline mflda::Payoff random_payoff(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 4), freq(-4, 4);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, kTwoPi);
  std::vector<mflda::PayoffTerm> terms;
  const int t = count(rng);
  for (int i = 0; i < t; ++i) terms.push_back({amp(rng), freq(rng), freq(rng), phase(rng)});
  return mflda::Payoff(std::move(terms));
}

inline mflda::Payoff decoupled() {
  return mflda::Payoff({{1.0, 1, 0, 0.0}, {-1.0, 0, 1, 0.0}});
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
