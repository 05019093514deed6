#include "mflda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace mflda {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string eigen_message(int it, double change, double res) {
  std::ostringstream os;
  os << "inverse iteration did not converge in " << it << " iterations (last relative change "
     << change << ", residual " << res << ")";
  return os.str();
}

// Symmetric pencil (K, M) with the operations the block solver needs.
struct Pencil {
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply_k;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply_m;
  std::function<void(double)> factor;  // prepares solve_shifted for K - sigma M
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> solve_shifted;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> solve_m;
  Eigen::VectorXd null_vector;  // projected out in the M inner product if nonempty
};

struct Eigenpair {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalized
  double residual = 0.0;
  int iterations = 0;
};

void project_out(const Pencil& p, Eigen::MatrixXd& x) {
  if (p.null_vector.size() == 0) return;
  const Eigen::VectorXd mc = p.apply_m(p.null_vector);
  const double cmc = p.null_vector.dot(mc);
  const Eigen::RowVectorXd coef = (mc.transpose() * x) / cmc;
  x -= p.null_vector * coef;
}

// Block shifted inverse iteration with Rayleigh-Ritz. Starts at sigma = -1
// and moves the shift to 0.9 theta once the lowest Ritz value settles.
Eigenpair smallest_eigenpair(const Pencil& p, Eigen::MatrixXd x) {
  constexpr int kMaxIter = 500;
  constexpr double kTol = 1e-12;
  constexpr double kResidualTol = 1e-9;
  double sigma = -1.0;
  p.factor(sigma);
  bool shifted = false;
  double theta_prev = std::numeric_limits<double>::quiet_NaN();
  double change = std::numeric_limits<double>::infinity();
  double best_res = std::numeric_limits<double>::infinity();
  double res = best_res;
  int stagnant = 0;
  project_out(p, x);
  for (int it = 1; it <= kMaxIter; ++it) {
    Eigen::MatrixXd y = p.solve_shifted(p.apply_m(x));
    project_out(p, y);
    const Eigen::MatrixXd ky = p.apply_k(y);
    const Eigen::MatrixXd my = p.apply_m(y);
    Eigen::MatrixXd kr = y.transpose() * ky;
    Eigen::MatrixXd mr = y.transpose() * my;
    kr = 0.5 * (kr + kr.transpose()).eval();
    mr = 0.5 * (mr + mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kr, mr);
    if (es.info() != Eigen::Success) throw EigenNotConverged(it, change, res);
    const Eigen::MatrixXd& c = es.eigenvectors();
    x = y * c;
    const double theta = es.eigenvalues()(0);
    const Eigen::VectorXd r = ky * c.col(0) - theta * (my * c.col(0));
    res = std::sqrt(std::max(r.dot(p.solve_m(r).col(0)), 0.0));
    change = std::abs(theta - theta_prev) / std::max(std::abs(theta), 1e-300);
    theta_prev = theta;

    if (res > 0.5 * best_res) {
      ++stagnant;
    } else {
      stagnant = 0;
    }
    best_res = std::min(best_res, res);
    if (change <= kTol && (res <= kResidualTol || stagnant >= 3)) {
      return Eigenpair{theta, x.col(0), res, it};
    }
    if (!shifted && change < 1e-3) {
      sigma = 0.9 * theta;
      p.factor(sigma);
      shifted = true;
    }
  }
  throw EigenNotConverged(kMaxIter, change, res);
}

// Deterministic starting block: low Fourier modes plus a small pseudo-random
// component so that no eigenvector is missed by symmetry.
Eigen::MatrixXd starting_block(const Eigen::MatrixXd& low_modes) {
  std::mt19937_64 gen(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x = low_modes;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double scale = 1e-3 * x.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += scale * u(gen);
  }
  return x;
}

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
}

// cos/sin of 2 pi m x_j computed from the integer phase m j mod n.
double node_angle(std::size_t m, std::size_t j, std::size_t n) {
  return kTwoPi * static_cast<double>((m * j) % n) / static_cast<double>(n);
}

}  // namespace

EigenNotConverged::EigenNotConverged(int it, double ch, double res)
    : Error(eigen_message(it, ch, res)), iterations(it), last_change(ch), residual(res) {}

GibbsMismatch::GibbsMismatch(double d)
    : Error("density is not the Gibbs measure of the given potential (defect " +
            std::to_string(d) + ")"),
      defect(d) {}

GapEstimate generator_gap(const Density& rho) {
  const std::size_t n = rho.size();
  const double h = rho.grid().spacing();
  if (!(rho.min() > 0.0)) throw InvalidArgument("generator_gap: density must be strictly positive");

  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t j1 = (j + 1) % n;
    const double w = 0.5 * (rho[j] + rho[j1]) / h;
    const auto a = static_cast<int>(j);
    const auto b = static_cast<int>(j1);
    trip.emplace_back(a, a, w);
    trip.emplace_back(b, b, w);
    trip.emplace_back(a, b, -w);
    trip.emplace_back(b, a, -w);
  }
  const auto ni = static_cast<Eigen::Index>(n);
  SpMat K(ni, ni);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd mdiag(ni);
  for (std::size_t j = 0; j < n; ++j) mdiag(static_cast<Eigen::Index>(j)) = h * rho[j];

  auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
  bool analyzed = false;
  Pencil p;
  p.apply_k = [&K](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return K * x; };
  p.apply_m = [&mdiag](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return mdiag.asDiagonal() * x;
  };
  p.factor = [&, lu](double sigma) {
    SpMat shifted = K;
    for (Eigen::Index j = 0; j < ni; ++j) shifted.coeffRef(j, j) -= sigma * mdiag(j);
    shifted.makeCompressed();
    if (!analyzed) {
      lu->analyzePattern(shifted);
      analyzed = true;
    }
    lu->factorize(shifted);
    if (lu->info() != Eigen::Success) throw EigenNotConverged(0, 0.0, 0.0);
  };
  p.solve_shifted = [lu](const Eigen::MatrixXd& b) -> Eigen::MatrixXd { return lu->solve(b); };
  p.solve_m = [&mdiag](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return mdiag.cwiseInverse().asDiagonal() * x;
  };
  p.null_vector = Eigen::VectorXd::Ones(ni);

  Eigen::MatrixXd low(ni, 4);
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    low(r, 0) = std::cos(node_angle(1, j, n));
    low(r, 1) = std::sin(node_angle(1, j, n));
    low(r, 2) = std::cos(node_angle(2, j, n));
    low(r, 3) = std::sin(node_angle(2, j, n));
  }
  Eigenpair e = smallest_eigenpair(p, starting_block(low));
  fix_sign(e.vector);
  GapEstimate out;
  out.lambda = e.value;
  out.eigenfunction =
      GridFunction(rho.grid(), std::vector<double>(e.vector.data(), e.vector.data() + n));
  out.residual = e.residual;
  out.iterations = e.iterations;
  return out;
}

double generator_gap_extrapolated(const Density& rho, int levels) {
  if (levels < 1) throw InvalidArgument("generator_gap_extrapolated: levels must be >= 1");
  const auto L = static_cast<std::size_t>(levels);
  std::vector<std::vector<double>> table(L);
  for (std::size_t i = 0; i < L; ++i) {
    double lam = 0.0;
    if (i == 0) {
      lam = generator_gap(rho).lambda;
    } else {
      const std::size_t nf = rho.size() << i;
      lam = generator_gap(Density(PeriodicGrid(nf), fourier_refine(rho.values(), nf))).lambda;
    }
    table[i].push_back(lam);
    double factor = 1.0;
    for (std::size_t k = 1; k <= i; ++k) {
      factor *= 4.0;
      table[i].push_back((factor * table[i][k - 1] - table[i - 1][k - 1]) / (factor - 1.0));
    }
  }
  return table[L - 1][L - 1];
}

namespace {

struct TrigBasis {
  Eigen::MatrixXd phi;  // basis functions at the nodes
  Eigen::MatrixXd d1;
  Eigen::MatrixXd d2;
};

// cos(2 pi m x), sin(2 pi m x) for m = 1..N/2-1.
TrigBasis trig_basis(std::size_t n) {
  const std::size_t modes = n / 2 - 1;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(2 * modes);
  TrigBasis b{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
  for (std::size_t m = 1; m <= modes; ++m) {
    const double w = kTwoPi * static_cast<double>(m);
    const auto cc = static_cast<Eigen::Index>(2 * (m - 1));
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      const double c = std::cos(node_angle(m, j, n));
      const double s = std::sin(node_angle(m, j, n));
      b.phi(r, cc) = c;
      b.phi(r, cc + 1) = s;
      b.d1(r, cc) = -w * s;
      b.d1(r, cc + 1) = w * c;
      b.d2(r, cc) = -w * w * c;
      b.d2(r, cc + 1) = -w * w * s;
    }
  }
  return b;
}

}  // namespace

GapEstimate rayleigh_gap(const Density& rho, const GridFunction& V) {
  if (!(rho.grid() == V.grid())) throw InvalidArgument("rayleigh_gap: grid mismatch");
  const std::size_t n = rho.size();
  {
    GridFunction neg_v = V;
    for (double& v : neg_v.values()) v = -v;
    const Density g = gibbs(neg_v);
    double defect = 0.0;
    for (std::size_t j = 0; j < n; ++j) defect = std::max(defect, std::abs(g[j] - rho[j]));
    if (defect > 1e-8) throw GibbsMismatch(defect);
  }
  const double h = rho.grid().spacing();
  const GridFunction v2 = spectral_derivative(V, 2);
  const TrigBasis basis = trig_basis(n);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  Eigen::VectorXd wv(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    w(static_cast<Eigen::Index>(j)) = h * rho[j];
    wv(static_cast<Eigen::Index>(j)) = h * rho[j] * v2[j];
  }
  const Eigen::MatrixXd A = basis.d2.transpose() * w.asDiagonal() * basis.d2 +
                            basis.d1.transpose() * wv.asDiagonal() * basis.d1;
  const Eigen::MatrixXd B = basis.d1.transpose() * w.asDiagonal() * basis.d1;

  auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>();
  auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(B);
  if (llt->info() != Eigen::Success) throw InvalidArgument("rayleigh_gap: gradient form is singular");
  Pencil p;
  p.apply_k = [&A](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return A * x; };
  p.apply_m = [&B](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return B * x; };
  p.factor = [&A, &B, lu](double sigma) { lu->compute(A - sigma * B); };
  p.solve_shifted = [lu](const Eigen::MatrixXd& b) -> Eigen::MatrixXd { return lu->solve(b); };
  p.solve_m = [llt](const Eigen::MatrixXd& b) -> Eigen::MatrixXd { return llt->solve(b); };

  const Eigen::MatrixXd low = Eigen::MatrixXd::Identity(A.rows(), std::min<Eigen::Index>(4, A.rows()));
  Eigenpair e = smallest_eigenpair(p, starting_block(low));
  Eigen::VectorXd values = basis.phi * e.vector;
  if (values.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::Index imax = 0;
    values.cwiseAbs().maxCoeff(&imax);
    if (values(imax) < 0.0) values = -values;
  }
  GapEstimate out;
  out.lambda = e.value;
  out.eigenfunction =
      GridFunction(rho.grid(), std::vector<double>(values.data(), values.data() + n));
  out.residual = e.residual;
  out.iterations = e.iterations;
  return out;
}

double rayleigh_quotient(const Density& rho, const GridFunction& V, const GridFunction& phi) {
  const GridFunction d1 = spectral_derivative(phi, 1);
  const GridFunction d2 = spectral_derivative(phi, 2);
  const GridFunction v2 = spectral_derivative(V, 2);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    num += (d2[j] * d2[j] + v2[j] * d1[j] * d1[j]) * rho[j];
    den += d1[j] * d1[j] * rho[j];
  }
  if (den == 0.0) throw InvalidArgument("rayleigh_quotient: direction has zero gradient");
  return num / den;
}

SpectralResult spectral_gap(const EquilibriumPair& eq, const Payoff& f) {
  SpectralResult r;
  GridFunction w_y = eq.U_star;
  for (double& v : w_y.values()) v = -v;

  const GapEstimate gx = generator_gap(eq.mu_star);
  const GapEstimate gy = generator_gap(eq.nu_star);
  r.lambda_x_generator_raw = gx.lambda;
  r.lambda_y_generator_raw = gy.lambda;
  r.lambda_x = generator_gap_extrapolated(eq.mu_star);
  r.lambda_y = generator_gap_extrapolated(eq.nu_star);
  r.lambda_gap = std::min(r.lambda_x, r.lambda_y);

  const GapEstimate rx = rayleigh_gap(eq.mu_star, eq.V_star);
  const GapEstimate ry = rayleigh_gap(eq.nu_star, w_y);
  r.lambda_x_rayleigh = rx.lambda;
  r.lambda_y_rayleigh = ry.lambda;
  r.residual_x = rx.residual;
  r.residual_y = ry.residual;
  r.eigenfunction_x = rx.eigenfunction;
  r.eigenfunction_y = ry.eigenfunction;
  r.holley_stroock_bound = 4.0 * std::numbers::pi * std::numbers::pi * std::exp(-f.sup_norm());
  return r;
}

nlohmann::json SpectralResult::to_json(bool with_eigenfunctions) const {
  nlohmann::json j = {{"lambda_x", lambda_x},
                      {"lambda_y", lambda_y},
                      {"lambda_gap", lambda_gap},
                      {"lambda_x_rayleigh", lambda_x_rayleigh},
                      {"lambda_y_rayleigh", lambda_y_rayleigh},
                      {"lambda_x_generator_raw", lambda_x_generator_raw},
                      {"lambda_y_generator_raw", lambda_y_generator_raw},
                      {"holley_stroock_bound", holley_stroock_bound},
                      {"residual_x", residual_x},
                      {"residual_y", residual_y}};
  if (with_eigenfunctions) {
    auto arr = [](const GridFunction& g) {
      return std::vector<double>(g.values().begin(), g.values().end());
    };
    j["eigenfunction_x"] = arr(eigenfunction_x);
    j["eigenfunction_y"] = arr(eigenfunction_y);
  }
  return j;
}

}  // namespace mflda
