#include <doctest.h>

#include <algorithm>

#include "mflda/equilibrium.hpp"
#include "mflda/geometry.hpp"
#include "mflda/spectral.hpp"
#include "support.hpp"
#include "transport_oracle.hpp"

using namespace mflda;
using namespace testing;

TEST_CASE("entropy") {
  CHECK(entropy(Density::uniform(PeriodicGrid(64))) == 0.0);
  CHECK(std::abs(entropy(gibbs_cos(256)) - kGibbsEntropy) < 1e-9);
  CHECK(entropy(bump(256, 0.3, 0.02)) > 0.0);
}

TEST_CASE("kl divergence") {
  std::mt19937_64 rng(1);
  const auto rho = random_density(128, rng);
  CHECK(kl(rho, rho) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl(rho, Density::uniform(PeriodicGrid(128))) == doctest::Approx(entropy(rho)).epsilon(1e-13));
  for (int i = 0; i < 100; ++i) {
    const auto a = random_density(128, rng);
    const auto b = random_density(128, rng);
    double l1 = 0.0;
    for (std::size_t j = 0; j < 128; ++j) l1 += std::abs(a[j] - b[j]) / 128.0;
    const double d = kl(a, b);
    CHECK(d >= 0.0);
    CHECK(d >= 0.5 * l1 * l1);
  }
  std::vector<double> hole(16, 1.0);
  hole[4] = 0.0;
  CHECK_THROWS_AS(kl(Density::uniform(PeriodicGrid(16)), Density(PeriodicGrid(16), hole)), SupportMismatch);
}

TEST_CASE("saddle value and the saddle property at the equilibrium") {
  const auto uni = Density::uniform(PeriodicGrid(128));
  CHECK(saddle_value(Payoff(), uni, uni) == 0.0);
  CHECK(std::abs(saddle_value(decoupled(), uni, uni)) < 1e-15);

  const Payoff f = decoupled();
  const auto eq = solve_mne(f, PeriodicGrid(128));
  const double star = saddle_value(f, eq.mu_star, eq.nu_star);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto mu = random_density(128, rng);
    const auto nu = random_density(128, rng);
    CHECK(saddle_value(f, eq.mu_star, nu) <= star + 1e-9);
    CHECK(star <= saddle_value(f, mu, eq.nu_star) + 1e-9);
  }
}

TEST_CASE("NI closed form against the definitional maximizers") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Payoff f = random_payoff(rng);
    const auto mu = random_density(128, rng);
    const auto nu = random_density(128, rng);
    const auto p = induced_potentials(f, mu, nu);
    auto minus_v = p.V;
    for (double& v : minus_v.values()) v = -v;
    const double def = saddle_value(f, mu, gibbs(p.U)) - saddle_value(f, gibbs(minus_v), nu);
    CHECK(std::abs(ni_error(f, mu, nu) - def) <= 1e-10);
  }
  const auto mu = random_density(64, rng);
  CHECK(ni_error(Payoff(), mu, mu) == doctest::Approx(2.0 * entropy(mu)).epsilon(1e-14));
}

TEST_CASE("KL sum is bounded by NI") {
  std::mt19937_64 rng(4);
  const Payoff f({{0.6, 1, 1, 0.3}, {-0.4, 2, 1, 0.0}});
  const auto eq = solve_mne(f, PeriodicGrid(128));
  for (int i = 0; i < 50; ++i) {
    const auto mu = random_density(128, rng);
    const auto nu = random_density(128, rng);
    CHECK(kl(mu, eq.mu_star) + kl(nu, eq.nu_star) <= ni_error(f, mu, nu) + 1e-9);
  }
}

TEST_CASE("NI is continuous under shrinking perturbations") {
  const Payoff f = decoupled();
  std::mt19937_64 rng(8);
  const auto mu = random_density(64, rng);
  const auto nu = random_density(64, rng);
  const auto dir = random_density(64, rng);
  const double base = ni_error(f, mu, nu);
  double prev = 1e300;
  for (double s : {1e-1, 1e-2, 1e-3, 1e-4}) {
    std::vector<double> v(64);
    for (std::size_t j = 0; j < 64; ++j) v[j] = (1 - s) * mu[j] + s * dir[j];
    const double gap = std::abs(ni_error(f, Density(PeriodicGrid(64), v), nu) - base);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("w2 on the circle: trivial cases") {
  std::mt19937_64 rng(5);
  const auto rho = random_density(128, rng);
  CHECK(w2_circle(rho, rho) <= 1e-12);
  const auto uni = Density::uniform(PeriodicGrid(128));
  CHECK(w2_circle(uni, uni) <= 1e-12);

  std::vector<double> a(64, 0.0), b(64, 0.0);
  a[0] = 1.0;
  b[32] = 1.0;
  CHECK(w2_oracle(Density(PeriodicGrid(64), a), Density(PeriodicGrid(64), b)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w2_oracle(rho, rho) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(w2_oracle(Density::uniform(PeriodicGrid(256)), Density::uniform(PeriodicGrid(256))),
                  GridTooLarge);
}

TEST_CASE("w2 between separated bumps") {
  const auto a = bump(64, 0.2, 0.03);
  const auto b = bump(64, 0.45, 0.03);
  const double w = w2_circle(a, b);
  CHECK(std::abs(w - 0.25) < 2e-3);
  CHECK(std::abs(w - step_quantile_w2(a, b)) < 1e-3);
}

TEST_CASE("exact oracles agree with each other and with the quantile method") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = (i % 2) ? 32 : 64;
    const auto a = random_density(n, rng, 1.0);
    const auto b = random_density(n, rng, 1.0);
    const double exact = step_quantile_w2(a, b);
    CHECK(w2_oracle(a, b) == doctest::Approx(exact).epsilon(1e-9));
    CHECK(std::abs(w2_circle(a, b) - exact) <= std::max(1e-3, 2.0 / static_cast<double>(n)));
  }
}

TEST_CASE("w2 metric axioms and rotation bound") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_density(128, rng, 1.0);
    const auto b = random_density(128, rng, 1.0);
    const auto c = random_density(128, rng, 1.0);
    CHECK(std::abs(w2_circle(a, b) - w2_circle(b, a)) <= 1e-10);
    CHECK(w2_circle(a, c) <= w2_circle(a, b) + w2_circle(b, c) + 1e-8);
  }
  const auto a = random_density(128, rng, 1.0);
  for (std::size_t s : {3u, 17u, 64u}) {
    std::vector<double> r(128);
    for (std::size_t j = 0; j < 128; ++j) r[j] = a[(j + 128 - s) % 128];
    CHECK(w2_circle(a, Density(PeriodicGrid(128), r)) <= s / 128.0 + 1e-6);
  }
}

TEST_CASE("first variation vanishes at the equilibrium") {
  const Payoff f = decoupled();
  const auto eq = solve_mne(f, PeriodicGrid(256));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const VariationDirection dir(random_phi(256, rng));
    CHECK(std::abs(first_variation_check(f, eq.mu_star, eq.nu_star, dir).analytic) <= 1e-8);
  }
  const VariationDirection zero(GridFunction(PeriodicGrid(256), 0.0));
  const auto r = first_variation_check(f, eq.mu_star, eq.nu_star, zero);
  CHECK(r.analytic == 0.0);
  CHECK(r.finite_difference == 0.0);
}

TEST_CASE("finite differences of the variation curve converge at second order") {
  std::mt19937_64 rng(10);
  const Payoff f({{0.5, 1, 1, 0.2}, {0.3, 2, 0, 0.0}});
  for (int i = 0; i < 3; ++i) {
    const auto mu = random_density(256, rng);
    const auto nu = random_density(256, rng);
    const VariationDirection dir(random_phi(256, rng));
    const double r1 = first_variation_check(f, mu, nu, dir, 1e-2).gap /
                      first_variation_check(f, mu, nu, dir, 5e-3).gap;
    const double r2 = second_variation(f, mu, nu, dir, 1e-2).gap / second_variation(f, mu, nu, dir, 5e-3).gap;
    CHECK(std::abs(r1 - 4.0) <= 0.6);
    CHECK(std::abs(r2 - 4.0) <= 0.6);
  }
}

TEST_CASE("second variation: flat value, integration by parts and the gap bound") {
  const auto uni = Density::uniform(PeriodicGrid(256));
  const VariationDirection s(sample(256, [](double x) { return std::sin(kTwoPi * x) / kTwoPi; }));
  CHECK(second_variation(Payoff(), uni, uni, s).value ==
        doctest::Approx(0.5 * kFourPi2).epsilon(1e-12));

  const Payoff f = decoupled();
  const auto eq = solve_mne(f, PeriodicGrid(256));
  const auto V1 = spectral_derivative(eq.V_star, 1);
  const double lam = spectral_gap(eq, f).lambda_x;
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const VariationDirection dir(random_phi(256, rng));
    const double value = second_variation(f, eq.mu_star, eq.nu_star, dir).value;
    double ibp = 0.0, dirichlet = 0.0;
    for (std::size_t j = 0; j < 256; ++j) {
      const double r = dir.d2()[j] - dir.d1()[j] * V1[j];
      ibp += r * r * eq.mu_star[j] / 256.0;
      dirichlet += dir.d1()[j] * dir.d1()[j] * eq.mu_star[j] / 256.0;
    }
    CHECK(std::abs(value - ibp) <= 1e-8);
    CHECK(value >= lam * dirichlet - 1e-8);
  }
}

TEST_CASE("second variation on the ascent side") {
  const Payoff f({{0.7, 1, 1, 0.4}});
  const auto eq = solve_mne(f, PeriodicGrid(256));
  const auto sr = spectral_gap(eq, f);
  auto minus_u = eq.U_star;
  for (double& v : minus_u.values()) v = -v;
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10; ++i) {
    const VariationDirection dir(random_phi(256, rng));
    double dirichlet = 0.0;
    for (std::size_t j = 0; j < 256; ++j) dirichlet += dir.d1()[j] * dir.d1()[j] * eq.nu_star[j] / 256.0;
    CHECK(second_variation_form(eq.nu_star, minus_u, dir) >= sr.lambda_y * dirichlet - 1e-8);
  }
}

TEST_CASE("metric sample") {
  const Payoff f = decoupled();
  const auto eq = solve_mne(f, PeriodicGrid(128));
  const auto s = evaluate_metrics(f, eq.mu_star, eq.nu_star, eq.mu_star, eq.nu_star, 0.5);
  CHECK(s.t == 0.5);
  CHECK(s.energy() <= 1e-20);
  CHECK(s.ni <= 1e-9);
  CHECK(s.mass_mu == doctest::Approx(1.0));
}
