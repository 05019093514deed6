#include "mflda/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mflda/fft.hpp"
#include "mflda/interpolation.hpp"

namespace mflda {

namespace {

std::string negative_message(std::size_t index, double value) {
  std::ostringstream os;
  os << "density value " << value << " at node " << index << " below -"
     << Density::kClipTolerance;
  return os.str();
}

std::string jacobian_message(double min_jacobian, double t) {
  std::ostringstream os;
  os << "pushforward Jacobian " << min_jacobian << " at t=" << t
     << " is not a diffeomorphism; reduce |t|";
  return os.str();
}

}  // namespace

NegativeDensity::NegativeDensity(std::size_t index_, double value_)
    : Error(negative_message(index_, value_)), index(index_), value(value_) {}

JacobianDegenerate::JacobianDegenerate(double min_jacobian_, double t_)
    : Error(jacobian_message(min_jacobian_, t_)), min_jacobian(min_jacobian_), t(t_) {}

PeriodicGrid::PeriodicGrid(std::size_t n_points) : n_(n_points) {
  if (n_points < kMinPoints) {
    throw InvalidArgument("PeriodicGrid needs at least 8 points, got " +
                          std::to_string(n_points));
  }
}

std::vector<double> PeriodicGrid::nodes() const {
  std::vector<double> x(n_);
  for (std::size_t j = 0; j < n_; ++j) x[j] = node(j);
  return x;
}

GridFunction::GridFunction(PeriodicGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("GridFunction: value count does not match grid");
  }
}

GridFunction::GridFunction(PeriodicGrid grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Density::Density(PeriodicGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("Density: value count does not match grid");
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    double& v = values_[j];
    if (!std::isfinite(v)) throw InvalidArgument("Density: non-finite value");
    if (v < 0.0) {
      if (v < -kClipTolerance) throw NegativeDensity(j, v);
      v = 0.0;
    }
  }
  const double m = quadrature(values_);
  if (!(m > 0.0)) throw InvalidArgument("Density: zero total mass");
  for (double& v : values_) v /= m;
}

Density Density::uniform(PeriodicGrid grid) {
  return Density(grid, std::vector<double>(grid.size(), 1.0));
}

double Density::mass() const { return quadrature(values_); }
double Density::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Density::max() const { return *std::max_element(values_.begin(), values_.end()); }

double quadrature(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double quadrature(const GridFunction& g) { return quadrature(g.values()); }
double quadrature(const Density& rho) { return quadrature(rho.values()); }

double quadrature(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("quadrature: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s / static_cast<double>(a.size());
}

double log_integral_exp(std::span<const double> w) {
  const double wmax = *std::max_element(w.begin(), w.end());
  double s = 0.0;
  for (double v : w) s += std::exp(v - wmax);
  return wmax + std::log(s / static_cast<double>(w.size()));
}

GridFunction spectral_derivative(const GridFunction& g, int order, DiffScheme scheme) {
  if (order != 1 && order != 2) throw InvalidArgument("spectral_derivative: order must be 1 or 2");
  for (double v : g.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("spectral_derivative: non-finite input");
  }
  const std::size_t n = g.size();
  if (n % 2 != 0) throw InvalidArgument("spectral_derivative: grid size must be even");

  if (scheme == DiffScheme::CentralDifference) {
    const double h = g.grid().spacing();
    GridFunction d(g.grid());
    for (std::size_t j = 0; j < n; ++j) {
      const double prev = g[(j + n - 1) % n];
      const double next = g[(j + 1) % n];
      d[j] = (order == 1) ? (next - prev) / (2 * h) : (next - 2 * g[j] + prev) / (h * h);
    }
    return d;
  }

  auto c = fft::forward(g.values());
  const std::size_t nyq = n / 2;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const fft::Complex ik(0.0, 2.0 * std::numbers::pi * static_cast<double>(k));
    c[k] *= (order == 1) ? ik : ik * ik;
  }
  if (order == 1) c[nyq] = 0.0;
  return GridFunction(g.grid(), fft::inverse(c, n));
}

std::vector<double> fourier_refine(std::span<const double> values, std::size_t n_fine) {
  const std::size_t n = values.size();
  if (n_fine < n || n % 2 != 0 || n_fine % 2 != 0) {
    throw InvalidArgument("fourier_refine: target must be an even size >= source");
  }
  auto c = fft::forward(values);
  std::vector<fft::Complex> cf(n_fine / 2 + 1, 0.0);
  const double scale = static_cast<double>(n_fine) / static_cast<double>(n);
  for (std::size_t k = 0; k < n / 2; ++k) cf[k] = c[k] * scale;
  // The source Nyquist mode is a cosine; split it evenly between +-N/2.
  if (n_fine > n) {
    cf[n / 2] = 0.5 * c[n / 2] * scale;
  } else {
    cf[n / 2] = c[n / 2] * scale;
  }
  return fft::inverse(cf, n_fine);
}

std::vector<double> spectral_cdf(const Density& rho) {
  const std::size_t n = rho.size();
  const auto c = fft::forward(rho.values());
  const double inv_n = 1.0 / static_cast<double>(n);
  // Antiderivative of the zero-mean part, Nyquist dropped (it integrates to
  // zero between nodes).
  std::vector<fft::Complex> a(c.size(), 0.0);
  for (std::size_t k = 1; k < n / 2; ++k) {
    a[k] = c[k] / fft::Complex(0.0, 2.0 * std::numbers::pi * static_cast<double>(k));
  }
  auto periodic = fft::inverse(a, n);
  const double mean0 = c[0].real() * inv_n;
  std::vector<double> cdf(n);
  for (std::size_t j = 0; j < n; ++j) {
    cdf[j] = mean0 * rho.grid().node(j) + (periodic[j] - periodic[0]);
  }
  return cdf;
}

PushforwardResult pushforward_1d(const Density& rho, const GridFunction& phi, double t,
                                 double min_jacobian) {
  if (!(rho.grid() == phi.grid())) throw InvalidArgument("pushforward_1d: grid mismatch");
  const PeriodicGrid grid = rho.grid();
  const std::size_t n = grid.size();
  if (t == 0.0) return {rho, 1.0};

  const GridFunction d1 = spectral_derivative(phi, 1);
  const GridFunction d2 = spectral_derivative(phi, 2);
  double jac_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) jac_min = std::min(jac_min, 1.0 + t * d2[j]);
  if (!(jac_min >= min_jacobian)) throw JacobianDegenerate(jac_min, t);

  const std::vector<double> cdf = spectral_cdf(rho);
  // Three periods of transported knots so every node of [0, 1) is covered.
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ms;
  xs.reserve(3 * n + 1);
  ys.reserve(3 * n + 1);
  ms.reserve(3 * n + 1);
  for (int period = -1; period <= 1; ++period) {
    for (std::size_t j = 0; j < n; ++j) {
      xs.push_back(grid.node(j) + t * d1[j] + period);
      ys.push_back(cdf[j] + period);
      ms.push_back(rho[j] / (1.0 + t * d2[j]));
    }
  }
  xs.push_back(grid.node(0) + t * d1[0] + 2);
  ys.push_back(cdf[0] + 2);
  ms.push_back(rho[0] / (1.0 + t * d2[0]));
  const MonotoneCubic spline(std::move(xs), std::move(ys), std::move(ms));

  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = spline.derivative(grid.node(j));
  const double mass = quadrature(out);
  return {Density(grid, std::move(out)), mass};
}

}  // namespace mflda
