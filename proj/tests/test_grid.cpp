#include <doctest.h>

#include "mflda/fft.hpp"
#include "mflda/grid.hpp"
#include "mflda/interpolation.hpp"
#include "support.hpp"

using namespace mflda;
using namespace testing;

TEST_CASE("quadrature of constants, zero-mean modes and the Bessel integrand") {
  CHECK(quadrature(sample(64, [](double) { return 1.0; })) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(quadrature(sample(64, [](double x) { return std::cos(kTwoPi * x); }))) < 1e-14);
  const double i0 = quadrature(sample(256, [](double x) { return std::exp(-std::cos(kTwoPi * x)); }));
  CHECK(std::abs(i0 - kI0) < 1e-13);
}

TEST_CASE("log_integral_exp survives large shifts") {
  auto w = sample(128, [](double x) { return 800.0 + std::cos(kTwoPi * x); });
  CHECK(log_integral_exp(w.values()) == doctest::Approx(800.0 + std::log(kI0)).epsilon(1e-14));
}

TEST_CASE("spectral derivatives of trigonometric samples") {
  auto s = sample(64, [](double x) { return std::sin(kTwoPi * x); });
  auto d = spectral_derivative(s, 1);
  auto ref = sample(64, [](double x) { return kTwoPi * std::cos(kTwoPi * x); });
  CHECK(max_diff(d.values(), ref.values()) <= 1e-12);

  auto c = sample(64, [](double) { return 3.25; });
  CHECK(spectral_derivative(c, 1).max_abs() < 1e-13);

  auto q = sample(64, [](double x) { return std::cos(2 * kTwoPi * x); });
  auto ref2 = sample(64, [](double x) { return -4.0 * kFourPi2 * std::cos(2 * kTwoPi * x); });
  CHECK(max_diff(spectral_derivative(q, 2).values(), ref2.values()) <= 1e-10);
}

TEST_CASE("central differences converge at second order") {
  auto err = [](std::size_t n) {
    auto s = sample(n, [](double x) { return std::sin(kTwoPi * x); });
    auto ref = sample(n, [](double x) { return kTwoPi * std::cos(kTwoPi * x); });
    return max_diff(spectral_derivative(s, 1, DiffScheme::CentralDifference).values(), ref.values());
  };
  CHECK(err(64) / err(128) == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("density clipping policy") {
  PeriodicGrid g(8);
  Density d(g, {1, 1, 1, 1, 1, 1, 1, -5e-13});
  CHECK(d.min() == 0.0);
  CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(Density(g, {1, 1, 1, 1, 1, 1, 1, -1e-9}), NegativeDensity);
  CHECK_THROWS_AS(Density(g, std::vector<double>(8, 0.0)), Error);
  CHECK_THROWS_AS(PeriodicGrid(4), InvalidArgument);
}

TEST_CASE("fft round trip") {
  std::mt19937_64 rng(3);
  auto rho = random_density(96, rng);
  auto c = fft::forward(rho.values());
  auto back = fft::inverse(c, 96);
  CHECK(max_diff(back, rho.values()) < 1e-13);
}

TEST_CASE("fourier_refine reproduces band-limited data") {
  auto coarse = sample(32, [](double x) { return std::cos(3 * kTwoPi * x) + 0.5 * std::sin(kTwoPi * x); });
  auto fine = fourier_refine(coarse.values(), 128);
  auto ref = sample(128, [](double x) { return std::cos(3 * kTwoPi * x) + 0.5 * std::sin(kTwoPi * x); });
  CHECK(max_diff(fine, ref.values()) < 1e-13);
}

TEST_CASE("spectral_cdf of the Gibbs density") {
  auto rho = gibbs_cos(128);
  auto F = spectral_cdf(rho);
  // int_0^x e^{-cos 2 pi s} ds at x = 1/2 is I_0(1)/2 by symmetry.
  CHECK(F[0] == 0.0);
  CHECK(F[64] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("monotone cubic interpolation and inverse") {
  MonotoneCubic m({0.0, 1.0, 2.0, 3.0}, {0.0, 0.0, 1.0, 3.0}, {0.0, 0.0, 1.0, 2.0});
  for (double x = 0.0; x < 3.0; x += 0.01) CHECK(m.derivative(x) >= -1e-14);
  CHECK(m(2.0) == doctest::Approx(1.0));
  CHECK(m(m.inverse(2.2)) == doctest::Approx(2.2).epsilon(1e-12));
}

TEST_CASE("piecewise linear cdf quantiles") {
  PiecewiseLinearCdf u(std::vector<double>(16, 1.0));
  CHECK(u.quantile(0.3) == doctest::Approx(0.3).epsilon(1e-14));
  std::size_t cell = 0;
  PiecewiseLinearCdf c(gibbs_cos(64).values());
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double q = c.quantile(i / 100.0, cell);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK_THROWS_AS(PiecewiseLinearCdf(std::vector<double>(8, 0.0)), InvalidArgument);
}

namespace {

// Exact pushforward density of the Gibbs profile under x + t phi'(x) with
// phi = (c / 2pi) sin(2 pi x): bisection for the preimage of each target.
double pushforward_oracle(double y, double c, double t) {
  auto T = [&](double x) { return x + t * c * std::cos(kTwoPi * x); };
  double lo = y - 1.0, hi = y + 1.0;  // T - id is bounded by |tc| < 1
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    (T(mid) < y ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double jac = 1.0 - t * c * kTwoPi * std::sin(kTwoPi * x);
  return std::exp(-std::cos(kTwoPi * x)) / kI0 / jac;
}

}  // namespace

TEST_CASE("pushforward: identity maps and the change-of-variables oracle") {
  auto rho = gibbs_cos(256);
  auto zero = sample(256, [](double) { return 0.0; });
  CHECK(max_diff(pushforward_1d(rho, zero, 0.7).density.values(), rho.values()) < 1e-14);

  auto uni = Density::uniform(PeriodicGrid(256));
  CHECK(max_diff(pushforward_1d(uni, zero, 1.0).density.values(), uni.values()) < 1e-14);

  const double c = 0.01;
  auto phi = sample(256, [&](double x) { return c / kTwoPi * std::sin(kTwoPi * x); });
  auto pf = pushforward_1d(rho, phi, 1.0);
  CHECK(std::abs(pf.renormalization - 1.0) < 1e-8);
  // L1 against the oracle, integrated on 2^14 points by trigonometric interpolation.
  const std::size_t fine = 1u << 14;
  auto up = fourier_refine(pf.density.values(), fine);
  double l1 = 0.0;
  for (std::size_t j = 0; j < fine; ++j) {
    l1 += std::abs(up[j] - pushforward_oracle(static_cast<double>(j) / fine, c, 1.0));
  }
  l1 /= static_cast<double>(fine);
  CHECK(l1 < 1e-6);
}

TEST_CASE("pushforward rejects folding maps") {
  auto rho = gibbs_cos(64);
  auto phi = sample(64, [](double x) { return std::sin(kTwoPi * x) / kTwoPi; });
  CHECK_THROWS_AS(pushforward_1d(rho, phi, 1.0), JacobianDegenerate);
}
