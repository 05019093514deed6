#include <doctest.h>

#include "mflda/payoff.hpp"
#include "support.hpp"

using namespace mflda;
using namespace testing;

TEST_CASE("json round trip and validation") {
  const Payoff f({{0.3, 1, -2, 0.7}, {-0.5, 0, 3, 0.0}});
  const Payoff g = Payoff::from_json(f.to_json());
  CHECK(g.to_json() == f.to_json());
  CHECK_THROWS_AS(Payoff::from_json(nlohmann::json::object()), InvalidArgument);
  CHECK_THROWS_AS(Payoff::from_json({{"terms", {{{"k", 1}}}}}), InvalidArgument);
  CHECK_THROWS_AS(Payoff({{1.0, 99, 0, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(Payoff({{std::nan(""), 1, 0, 0.0}}), InvalidArgument);
}

TEST_CASE("pointwise value and second derivatives") {
  const Payoff f({{0.3, 1, 2, 0.7}});
  const double x = 0.13, y = 0.71;
  const double arg = kTwoPi * (x + 2 * y) + 0.7;
  CHECK(f(x, y) == doctest::Approx(0.3 * std::cos(arg)));
  CHECK(f.d2xx(x, y) == doctest::Approx(-0.3 * kFourPi2 * std::cos(arg)));
  CHECK(f.d2yy(x, y) == doctest::Approx(-0.3 * 4 * kFourPi2 * std::cos(arg)));
}

TEST_CASE("induced potentials") {
  const PeriodicGrid g(128);
  const auto uni = Density::uniform(g);
  const auto rho = gibbs_cos(128);

  auto p0 = induced_potentials(Payoff(), rho, rho);
  CHECK(p0.V.max_abs() == 0.0);
  CHECK(p0.U.max_abs() == 0.0);

  auto p1 = induced_potentials(decoupled(), uni, uni);
  auto cosx = sample(128, [](double x) { return std::cos(kTwoPi * x); });
  CHECK(max_diff(p1.V.values(), cosx.values()) < 1e-14);
  // U_mu(y) = -cos(2 pi y) + int cos(2 pi x) dmu; the constant vanishes for uniform mu.
  auto mcos = sample(128, [](double x) { return -std::cos(kTwoPi * x); });
  CHECK(max_diff(p1.U.values(), mcos.values()) < 1e-14);

  // V picks up the constant int(-cos) dnu when nu is not uniform.
  auto p2 = induced_potentials(decoupled(), uni, rho);
  const double c = -(-kI1 / kI0);
  CHECK(max_diff(p2.V.values(), sample(128, [&](double x) { return std::cos(kTwoPi * x) + c; }).values()) <
        1e-13);

  auto p3 = induced_potentials(Payoff({{1.0, 1, -1, 0.0}}), uni, uni);
  CHECK(p3.V.max_abs() < 1e-15);
}

TEST_CASE("induced potentials agree with direct double quadrature") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Payoff f = random_payoff(rng);
    const auto mu = random_density(64, rng);
    const auto nu = random_density(64, rng);
    const auto p = induced_potentials(f, mu, nu);
    const PeriodicGrid g(64);
    for (std::size_t i = 0; i < 64; i += 7) {
      double v = 0.0, u = 0.0;
      for (std::size_t j = 0; j < 64; ++j) {
        v += f(g.node(i), g.node(j)) * nu[j];
        u += f(g.node(j), g.node(i)) * mu[j];
      }
      CHECK(p.V[i] == doctest::Approx(v / 64.0).epsilon(1e-12));
      CHECK(p.U[i] == doctest::Approx(u / 64.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical and grid moments give the same potential for quantile atoms") {
  const Payoff f({{0.4, 1, 1, 0.2}, {0.7, 2, -1, 0.0}});
  const auto nu = gibbs_cos(256);
  const TrigSeries a = potential_x(f, nu);
  std::vector<double> atoms(256);
  for (std::size_t j = 0; j < 256; ++j) atoms[j] = j / 256.0;
  // Uniform atoms reproduce the uniform density exactly.
  const TrigSeries b = potential_x(f, atoms);
  const TrigSeries c = potential_x(f, Density::uniform(PeriodicGrid(256)));
  for (double x : {0.0, 0.21, 0.5, 0.77}) CHECK(b(x) == doctest::Approx(c(x)).epsilon(1e-13));
  CHECK(std::isfinite(a.derivative(0.3, 2)));
}

TEST_CASE("convexity constant") {
  CHECK(Payoff().convexity_constant() == 0.0);
  CHECK(Payoff({{1.0, 1, 0, 0.0}}).convexity_constant() == doctest::Approx(-kFourPi2).epsilon(1e-12));
  const double lc = Payoff({{0.3, 1, 1, 0.7}}).convexity_constant();
  CHECK(std::abs(lc - kTiltedProbeMin) < 1e-6);
}

TEST_CASE("sup norm probe") {
  CHECK(Payoff().sup_norm() == 0.0);
  CHECK(Payoff({{1.0, 1, 0, 0.0}}).sup_norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(Payoff({{1.0, 1, 0, 0.0}, {0.5, 0, 1, 0.0}}).sup_norm() - 1.5) < 1e-6);
}

TEST_CASE("separable antisymmetric payoff") {
  // f = g(x) - g(y): U_mu = -V_nu - int g dnu + int g dmu, so U = -V when mu = nu.
  const Payoff f({{0.7, 1, 0, 0.3}, {0.2, 3, 0, 1.1}, {-0.7, 0, 1, 0.3}, {-0.2, 0, 3, 1.1}});
  auto g = [](double x) { return 0.7 * std::cos(kTwoPi * x + 0.3) + 0.2 * std::cos(3 * kTwoPi * x + 1.1); };
  std::mt19937_64 rng(12);
  const auto mu = random_density(128, rng);
  const auto nu = random_density(128, rng);
  double gm = 0.0, gn = 0.0;
  const PeriodicGrid grid(128);
  for (std::size_t j = 0; j < 128; ++j) {
    gm += g(grid.node(j)) * mu[j] / 128.0;
    gn += g(grid.node(j)) * nu[j] / 128.0;
  }
  const auto p = induced_potentials(f, mu, nu);
  for (std::size_t j = 0; j < 128; ++j) CHECK(std::abs(p.U[j] - (-p.V[j] - gn + gm)) <= 1e-12);
  const auto same = induced_potentials(f, mu, mu);
  for (std::size_t j = 0; j < 128; ++j) CHECK(std::abs(same.U[j] + same.V[j]) <= 1e-12);
}
