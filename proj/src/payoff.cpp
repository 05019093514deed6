#include "mflda/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mflda {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// cos / sin of 2 pi m j / n for all integer m via a table of size n.
struct UnitCircleTable {
  explicit UnitCircleTable(std::size_t n) : n_(n), c_(n), s_(n) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
      c_[j] = std::cos(a);
      s_[j] = std::sin(a);
    }
  }
  std::size_t index(long long m) const {
    const auto n = static_cast<long long>(n_);
    return static_cast<std::size_t>(((m % n) + n) % n);
  }
  double cos(long long m) const { return c_[index(m)]; }
  double sin(long long m) const { return s_[index(m)]; }

  std::size_t n_;
  std::vector<double> c_, s_;
};

// Sums value(term, cos(2 pi (k x + l y) + theta)) over terms at every probe
// node and folds the sums with op.
template <class TermValue, class Reduce>
double reduce_probe(std::span<const PayoffTerm> terms, std::size_t probe, double init,
                    TermValue value, Reduce op) {
  const UnitCircleTable table(probe);
  std::vector<double> cp, sp;
  for (const auto& t : terms) {
    cp.push_back(std::cos(t.phase));
    sp.push_back(std::sin(t.phase));
  }
  double acc = init;
  for (std::size_t i = 0; i < probe; ++i) {
    for (std::size_t j = 0; j < probe; ++j) {
      double v = 0.0;
      for (std::size_t m = 0; m < terms.size(); ++m) {
        const auto& t = terms[m];
        const long long a = static_cast<long long>(t.k) * static_cast<long long>(i) +
                            static_cast<long long>(t.l) * static_cast<long long>(j);
        v += value(t, table.cos(a) * cp[m] - table.sin(a) * sp[m]);
      }
      acc = op(acc, v);
    }
  }
  return acc;
}

}  // namespace

Payoff::Payoff(std::vector<PayoffTerm> terms) : terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (std::abs(t.k) > kMaxFrequency || std::abs(t.l) > kMaxFrequency) {
      throw InvalidArgument("payoff frequency exceeds 32");
    }
    if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase)) {
      throw InvalidArgument("payoff term is not finite");
    }
  }
}

Payoff Payoff::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array()) {
    throw InvalidArgument("payoff must be an object with a \"terms\" array");
  }
  std::vector<PayoffTerm> terms;
  for (const auto& t : j.at("terms")) {
    PayoffTerm term;
    try {
      term.amplitude = t.at("a").get<double>();
      term.k = t.value("k", 0);
      term.l = t.value("l", 0);
      term.phase = t.value("theta", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("malformed payoff term: ") + e.what());
    }
    terms.push_back(term);
  }
  return Payoff(std::move(terms));
}

nlohmann::json Payoff::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : terms_) {
    arr.push_back({{"a", t.amplitude}, {"k", t.k}, {"l", t.l}, {"theta", t.phase}});
  }
  return {{"terms", arr}};
}

bool Payoff::is_zero() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const PayoffTerm& t) { return t.amplitude == 0.0; });
}

double Payoff::operator()(double x, double y) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.amplitude * std::cos(kTwoPi * (t.k * x + t.l * y) + t.phase);
  return v;
}

double Payoff::d2xx(double x, double y) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    const double w = kTwoPi * t.k;
    v -= t.amplitude * w * w * std::cos(kTwoPi * (t.k * x + t.l * y) + t.phase);
  }
  return v;
}

double Payoff::d2yy(double x, double y) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    const double w = kTwoPi * t.l;
    v -= t.amplitude * w * w * std::cos(kTwoPi * (t.k * x + t.l * y) + t.phase);
  }
  return v;
}

double Payoff::sup_norm(std::size_t probe) const {
  if (terms_.empty()) return 0.0;
  return reduce_probe(
      terms_, probe, 0.0, [](const PayoffTerm& t, double c) { return t.amplitude * c; },
      [](double acc, double v) { return std::max(acc, std::abs(v)); });
}

double Payoff::convexity_constant(std::size_t probe) const {
  if (terms_.empty()) return 0.0;
  const double fxx_min = reduce_probe(
      terms_, probe, std::numeric_limits<double>::infinity(),
      [](const PayoffTerm& t, double c) {
        const double w = kTwoPi * t.k;
        return -t.amplitude * w * w * c;
      },
      [](double acc, double v) { return std::min(acc, v); });
  const double neg_fyy_min = reduce_probe(
      terms_, probe, std::numeric_limits<double>::infinity(),
      [](const PayoffTerm& t, double c) {
        const double w = kTwoPi * t.l;
        return t.amplitude * w * w * c;
      },
      [](double acc, double v) { return std::min(acc, v); });
  return std::min(fxx_min, neg_fyy_min);
}

double TrigSeries::derivative(double x, int order) const {
  double v = 0.0;
  for (const auto& [k, c] : modes_) {
    const double w = kTwoPi * k;
    std::complex<double> factor = 1.0;
    for (int i = 0; i < order; ++i) factor *= std::complex<double>(0.0, w);
    v += std::real(c * factor * std::polar(1.0, w * x));
  }
  return v;
}

GridFunction TrigSeries::sample(const PeriodicGrid& grid, int order) const {
  GridFunction g(grid);
  const std::size_t n = grid.size();
  const UnitCircleTable table(n);
  for (const auto& [k, c] : modes_) {
    const double w = kTwoPi * k;
    std::complex<double> factor = c;
    for (int i = 0; i < order; ++i) factor *= std::complex<double>(0.0, w);
    for (std::size_t j = 0; j < n; ++j) {
      const long long m = static_cast<long long>(k) * static_cast<long long>(j);
      g[j] += factor.real() * table.cos(m) - factor.imag() * table.sin(m);
    }
  }
  return g;
}

std::complex<double> fourier_moment(const Density& rho, int freq) {
  if (freq == 0) return 1.0;
  const std::size_t n = rho.size();
  const UnitCircleTable table(n);
  double c = 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const long long m = static_cast<long long>(freq) * static_cast<long long>(j);
    c += table.cos(m) * rho[j];
    s += table.sin(m) * rho[j];
  }
  const double h = rho.grid().spacing();
  return {h * c, h * s};
}

std::complex<double> fourier_moment(std::span<const double> samples, int freq) {
  if (freq == 0) return 1.0;
  double c = 0.0;
  double s = 0.0;
  for (double y : samples) {
    const double a = kTwoPi * freq * y;
    c += std::cos(a);
    s += std::sin(a);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  return {c * inv, s * inv};
}

namespace {

template <class Moment>
TrigSeries potential_x_impl(const Payoff& f, Moment moment) {
  std::vector<TrigSeries::Mode> modes;
  for (const auto& t : f.terms()) {
    modes.emplace_back(t.k, t.amplitude * std::polar(1.0, t.phase) * moment(t.l));
  }
  return TrigSeries(std::move(modes));
}

template <class Moment>
TrigSeries potential_y_impl(const Payoff& f, Moment moment) {
  std::vector<TrigSeries::Mode> modes;
  for (const auto& t : f.terms()) {
    modes.emplace_back(t.l, t.amplitude * std::polar(1.0, t.phase) * moment(t.k));
  }
  return TrigSeries(std::move(modes));
}

}  // namespace

TrigSeries potential_x(const Payoff& f, const Density& nu) {
  return potential_x_impl(f, [&](int l) { return fourier_moment(nu, l); });
}
TrigSeries potential_x(const Payoff& f, std::span<const double> nu_samples) {
  return potential_x_impl(f, [&](int l) { return fourier_moment(nu_samples, l); });
}
TrigSeries potential_y(const Payoff& f, const Density& mu) {
  return potential_y_impl(f, [&](int k) { return fourier_moment(mu, k); });
}
TrigSeries potential_y(const Payoff& f, std::span<const double> mu_samples) {
  return potential_y_impl(f, [&](int k) { return fourier_moment(mu_samples, k); });
}

TrigSeries potential_x_from_moments(const Payoff& f, const MomentFn& nu_moment) {
  return potential_x_impl(f, nu_moment);
}
TrigSeries potential_y_from_moments(const Payoff& f, const MomentFn& mu_moment) {
  return potential_y_impl(f, mu_moment);
}

InducedPotentials induced_potentials(const Payoff& f, const Density& mu, const Density& nu) {
  return {potential_x(f, nu).sample(mu.grid()), potential_y(f, mu).sample(nu.grid())};
}

}  // namespace mflda
