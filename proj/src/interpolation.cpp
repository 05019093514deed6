#include "mflda/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "mflda/grid.hpp"

namespace mflda {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y,
                             std::vector<double> slopes)
    : x_(std::move(x)), y_(std::move(y)), m_(std::move(slopes)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n || m_.size() != n) {
    throw InvalidArgument("MonotoneCubic: need >= 2 knots with matching values and slopes");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x_[i + 1] > x_[i])) throw InvalidArgument("MonotoneCubic: knots not increasing");
    if (y_[i + 1] < y_[i]) throw InvalidArgument("MonotoneCubic: values decreasing");
  }
  for (double& m : m_) m = std::max(m, 0.0);

  // Fritsch-Carlson: keep (alpha, beta) inside the circle of radius 3.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double delta = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (delta == 0.0) {
      m_[i] = 0.0;
      m_[i + 1] = 0.0;
      continue;
    }
    const double a = m_[i] / delta;
    const double b = m_[i + 1] / delta;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m_[i] = tau * a * delta;
      m_[i + 1] = tau * b * delta;
    }
  }
}

std::size_t MonotoneCubic::cell_of(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0;
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double MonotoneCubic::operator()(double x) const {
  const std::size_t i = cell_of(x);
  const double h = x_[i + 1] - x_[i];
  const double s = (x - x_[i]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  const std::size_t i = cell_of(x);
  const double h = x_[i + 1] - x_[i];
  const double s = (x - x_[i]) / h;
  const double s2 = s * s;
  const double d00 = (6 * s2 - 6 * s) / h;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = (-6 * s2 + 6 * s) / h;
  const double d11 = 3 * s2 - 2 * s;
  return d00 * y_[i] + d10 * m_[i] + d01 * y_[i + 1] + d11 * m_[i + 1];
}

double MonotoneCubic::inverse(double y) const {
  if (y <= y_.front()) return x_.front();
  if (y >= y_.back()) return x_.back();
  // First cell whose right value reaches y.
  auto it = std::lower_bound(y_.begin() + 1, y_.end(), y);
  const auto i = static_cast<std::size_t>(it - y_.begin()) - 1;
  double lo = x_[i];
  double hi = x_[i + 1];
  if (y_[i + 1] == y_[i]) return lo;
  // Safeguarded Newton on a monotone cubic.
  double x = lo + (hi - lo) * (y - y_[i]) / (y_[i + 1] - y_[i]);
  for (int iter = 0; iter < 100; ++iter) {
    const double r = (*this)(x)-y;
    if (r > 0) {
      hi = x;
    } else {
      lo = x;
    }
    const double d = derivative(x);
    double next = (d > 0) ? x - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-17) {
      return next;
    }
    x = next;
  }
  return x;
}

PiecewiseLinearCdf::PiecewiseLinearCdf(std::span<const double> values)
    : n_(values.size()), h_(1.0 / static_cast<double>(n_)), rho_(n_ + 1), cdf_(n_ + 1) {
  if (n_ < 2) throw InvalidArgument("PiecewiseLinearCdf: need at least two values");
  for (std::size_t j = 0; j < n_; ++j) {
    if (!(values[j] >= 0.0)) throw InvalidArgument("PiecewiseLinearCdf: negative value");
    rho_[j] = values[j];
  }
  rho_[n_] = values[0];
  cdf_[0] = 0.0;
  for (std::size_t j = 0; j < n_; ++j) cdf_[j + 1] = cdf_[j] + 0.5 * h_ * (rho_[j] + rho_[j + 1]);
  const double total = cdf_[n_];
  if (!(total > 0.0)) throw InvalidArgument("PiecewiseLinearCdf: zero mass");
  for (double& c : cdf_) c /= total;
  for (double& r : rho_) r /= total;
  cdf_[n_] = 1.0;
}

double PiecewiseLinearCdf::quantile(double r, std::size_t& cell) const {
  if (r <= 0.0) {
    cell = 0;
    return 0.0;
  }
  if (r >= 1.0) {
    cell = n_ - 1;
    return 1.0;
  }
  if (cell >= n_ || cdf_[cell] > r) {
    cell = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), r) - cdf_.begin());
    cell = cell == 0 ? 0 : std::min(cell - 1, n_ - 1);
  }
  while (cell + 1 < n_ && cdf_[cell + 1] < r) ++cell;
  const double d = r - cdf_[cell];
  const double a = rho_[cell];
  const double slope = (rho_[cell + 1] - rho_[cell]) / h_;
  const double disc = std::max(a * a + 2.0 * slope * d, 0.0);
  const double denom = a + std::sqrt(disc);
  double s = denom > 0.0 ? 2.0 * d / denom : 0.0;
  s = std::clamp(s, 0.0, h_);
  return static_cast<double>(cell) * h_ + s;
}

double PiecewiseLinearCdf::quantile(double r) const {
  std::size_t cell = n_;
  return quantile(r, cell);
}

}  // namespace mflda
