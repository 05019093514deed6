// Two routes to W2 on the circle: the circular quantile method and an exact
// min-cost-flow solve of the discrete transport problem.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mflda/geometry.hpp"
#include "mflda/interpolation.hpp"

namespace mflda {

GridTooLarge::GridTooLarge(std::size_t n, std::size_t limit)
    : Error("w2_oracle supports grids up to " + std::to_string(limit) + " points, got " +
            std::to_string(n)) {}

namespace {

double torus_cost(double x, double y) {
  double d = std::abs(x - y);
  d -= std::floor(d);
  d = std::min(d, 1.0 - d);
  return d * d;
}

}  // namespace

double w2_circle(const Density& rho, const Density& sigma) {
  if (!(rho.grid() == sigma.grid())) throw InvalidArgument("w2_circle: grid mismatch");
  const PiecewiseLinearCdf cdf_rho(rho.values());
  const PiecewiseLinearCdf cdf_sigma(sigma.values());
  const auto knots_rho = cdf_rho.knots();
  const auto knots_sigma = cdf_sigma.knots();

  // 4-point Gauss-Legendre on [0, 1].
  constexpr double kNode[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                               0.9305681557970263};
  constexpr double kWeight[4] = {0.1739274225337269, 0.3260725774662731, 0.3260725774662731,
                                 0.1739274225337269};

  // int_0^1 |Q_rho(q) - Q_sigma(q + theta)|^2 dq with Q_sigma(u + 1) = Q_sigma(u) + 1,
  // split where either quantile changes cell so every piece is smooth.
  std::vector<double> cuts;
  cuts.reserve(knots_rho.size() + 3 * knots_sigma.size());
  std::vector<double> shifted;
  shifted.reserve(3 * knots_sigma.size());
  auto cost = [&](double theta) {
    shifted.clear();
    for (int k = -1; k <= 2; ++k) {
      for (double c : knots_sigma) {
        const double q = c + k - theta;
        if (q > 0.0 && q < 1.0) shifted.push_back(q);
      }
    }
    cuts.resize(knots_rho.size() + shifted.size());
    std::merge(knots_rho.begin(), knots_rho.end(), shifted.begin(), shifted.end(), cuts.begin());
    std::size_t cr = 0;
    std::size_t cs = 0;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double len = cuts[i + 1] - cuts[i];
      if (len <= 0.0) continue;
      for (int g = 0; g < 4; ++g) {
        const double q = cuts[i] + kNode[g] * len;
        const double u = q + theta;
        const double k = std::floor(u);
        const double d = cdf_rho.quantile(q, cr) - (k + cdf_sigma.quantile(u - k, cs));
        s += kWeight[g] * len * d * d;
      }
    }
    return s;
  };

  // Convex in theta for the quadratic cost.
  double lo = -1.0;
  double hi = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (cost(a) <= cost(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  // One parabolic step through the final bracket.
  const double mid = 0.5 * (lo + hi);
  const double f_lo = cost(lo);
  const double f_mid = cost(mid);
  const double f_hi = cost(hi);
  double best = std::min({f_lo, f_mid, f_hi});
  const double num = (mid - lo) * (mid - lo) * (f_mid - f_hi) - (mid - hi) * (mid - hi) * (f_mid - f_lo);
  const double den = (mid - lo) * (f_mid - f_hi) - (mid - hi) * (f_mid - f_lo);
  if (den != 0.0) {
    const double v = mid - 0.5 * num / den;
    if (v > lo && v < hi) best = std::min(best, cost(v));
  }
  return std::sqrt(std::max(best, 0.0));
}

double w2_oracle(const Density& rho, const Density& sigma) {
  constexpr std::size_t kLimit = 128;
  if (!(rho.grid() == sigma.grid())) throw InvalidArgument("w2_oracle: grid mismatch");
  const std::size_t n = rho.size();
  if (n > kLimit) throw GridTooLarge(n, kLimit);
  const double h = rho.grid().spacing();

  // Atoms with positive mass.
  std::vector<double> xs, ys, supply, demand;
  for (std::size_t j = 0; j < n; ++j) {
    if (rho[j] > 0.0) {
      xs.push_back(rho.grid().node(j));
      supply.push_back(h * rho[j]);
    }
    if (sigma[j] > 0.0) {
      ys.push_back(sigma.grid().node(j));
      demand.push_back(h * sigma[j]);
    }
  }
  const std::size_t ns = xs.size();
  const std::size_t nt = ys.size();
  std::vector<double> cost(ns * nt);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) cost[i * nt + j] = torus_cost(xs[i], ys[j]);
  }

  // Successive shortest paths with Johnson potentials on the residual graph:
  // forward arcs source->sink are uncapacitated, backward arcs carry flow.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kEps = 1e-15;
  std::vector<double> flow(ns * nt, 0.0);
  std::vector<double> pot_s(ns, 0.0), pot_t(nt, 0.0);
  std::vector<double> dist_s(ns), dist_t(nt);
  std::vector<std::ptrdiff_t> parent_s(ns), parent_t(nt);
  std::vector<char> done_s(ns), done_t(nt);

  double remaining = 0.0;
  for (double s : supply) remaining += s;
  for (std::size_t round = 0; remaining > 1e-13 && round < 100 * (ns + nt) * (ns + nt); ++round) {
    std::fill(dist_t.begin(), dist_t.end(), kInf);
    std::fill(parent_s.begin(), parent_s.end(), -1);
    std::fill(parent_t.begin(), parent_t.end(), -1);
    std::fill(done_s.begin(), done_s.end(), 0);
    std::fill(done_t.begin(), done_t.end(), 0);
    for (std::size_t i = 0; i < ns; ++i) dist_s[i] = supply[i] > kEps ? 0.0 : kInf;

    for (;;) {
      // Dense Dijkstra: pick the closest unfinished node.
      double best = kInf;
      std::ptrdiff_t pick = -1;
      bool pick_source = true;
      for (std::size_t i = 0; i < ns; ++i) {
        if (!done_s[i] && dist_s[i] < best) {
          best = dist_s[i];
          pick = static_cast<std::ptrdiff_t>(i);
          pick_source = true;
        }
      }
      for (std::size_t j = 0; j < nt; ++j) {
        if (!done_t[j] && dist_t[j] < best) {
          best = dist_t[j];
          pick = static_cast<std::ptrdiff_t>(j);
          pick_source = false;
        }
      }
      if (pick < 0) break;
      const auto p = static_cast<std::size_t>(pick);
      if (pick_source) {
        done_s[p] = 1;
        for (std::size_t j = 0; j < nt; ++j) {
          const double nd = dist_s[p] + cost[p * nt + j] + pot_s[p] - pot_t[j];
          if (nd < dist_t[j]) {
            dist_t[j] = nd;
            parent_t[j] = pick;
          }
        }
      } else {
        done_t[p] = 1;
        for (std::size_t i = 0; i < ns; ++i) {
          if (flow[i * nt + p] <= kEps) continue;
          const double nd = dist_t[p] - cost[i * nt + p] + pot_t[p] - pot_s[i];
          if (nd < dist_s[i]) {
            dist_s[i] = nd;
            parent_s[i] = pick;
          }
        }
      }
    }

    std::ptrdiff_t target = -1;
    for (std::size_t j = 0; j < nt; ++j) {
      if (demand[j] > kEps && (target < 0 || dist_t[j] < dist_t[static_cast<std::size_t>(target)])) {
        target = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (target < 0 || !std::isfinite(dist_t[static_cast<std::size_t>(target)])) break;
    const auto jt = static_cast<std::size_t>(target);

    // Bottleneck along the alternating path back to a root source.
    double amount = demand[jt];
    std::size_t j = jt;
    std::size_t i = static_cast<std::size_t>(parent_t[j]);
    for (;;) {
      if (parent_s[i] < 0) break;
      const auto jb = static_cast<std::size_t>(parent_s[i]);
      amount = std::min(amount, flow[i * nt + jb]);
      j = jb;
      i = static_cast<std::size_t>(parent_t[j]);
    }
    amount = std::min(amount, supply[i]);

    j = jt;
    i = static_cast<std::size_t>(parent_t[j]);
    demand[jt] -= amount;
    for (;;) {
      flow[i * nt + j] += amount;
      if (parent_s[i] < 0) break;
      const auto jb = static_cast<std::size_t>(parent_s[i]);
      flow[i * nt + jb] -= amount;
      j = jb;
      i = static_cast<std::size_t>(parent_t[j]);
    }
    supply[i] -= amount;
    remaining -= amount;

    const double cap = dist_t[jt];
    for (std::size_t a = 0; a < ns; ++a) pot_s[a] += std::min(dist_s[a], cap);
    for (std::size_t b = 0; b < nt; ++b) pot_t[b] += std::min(dist_t[b], cap);
  }

  double total = 0.0;
  for (std::size_t k = 0; k < ns * nt; ++k) {
    if (flow[k] > 0.0) total += flow[k] * cost[k];
  }
  return std::sqrt(std::max(total, 0.0));
}

}  // namespace mflda
