#pragma once

// Vector Fitting: linearized least squares with a weighting denominator
// whose zeros become the next pole set.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "ddc/aaa.hpp"
#include "ddc/errors.hpp"
#include "ddc/linalg.hpp"
#include "ddc/lti.hpp"
#include "ddc/plant_data.hpp"

namespace ddc {

/// Lightly damped conjugate pairs with imaginary parts log-spaced over
/// [w_min, w_max] and real parts -imag/100; odd n adds a real pole at
/// -sqrt(w_min w_max).
inline std::vector<cplx> vf_init_poles(double omega_min, double omega_max, std::size_t n) {
  require(n >= 1, "vf_init_poles: order must be at least 1");
  require(omega_min > 0.0 && omega_min <= omega_max, "vf_init_poles: invalid band");
  std::vector<cplx> poles;
  const std::size_t pairs = n / 2;
  for (std::size_t k = 0; k < pairs; ++k) {
    const double f = pairs == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(pairs - 1);
    const double w = std::pow(10.0, std::log10(omega_min) + f * (std::log10(omega_max) - std::log10(omega_min)));
    poles.emplace_back(-w / 100.0, w);
    poles.emplace_back(-w / 100.0, -w);
  }
  if (n % 2 == 1) poles.emplace_back(-std::sqrt(omega_min * omega_max), 0.0);
  return poles;
}

struct VfCoefficients {
  std::vector<cplx> numerator;    // c_i
  std::vector<cplx> denominator;  // d_i
  double direct = 0.0;
  double residual = 0.0;     // ||N - D f|| / ||f||
  double certificate = 0.0;  // normal-equations residual, relative
  bool rank_deficient = false;
};

namespace detail {

inline Eigen::MatrixXcd cauchy(const ClosedSamples& data, const std::vector<cplx>& poles) {
  const auto m = static_cast<Eigen::Index>(data.size());
  const auto n = static_cast<Eigen::Index>(poles.size());
  Eigen::MatrixXcd c(m, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const cplx z = data.z[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx gap = z - poles[static_cast<std::size_t>(i)];
      if (std::abs(gap) <= 1e-13 * std::max(1.0, std::abs(z))) {
        throw Error(ErrorCode::point_collision,
                    "pole coincides with sample at omega = " + std::to_string(z.imag()), z);
      }
      c(k, i) = 1.0 / gap;
    }
  }
  return c;
}

inline double certificate(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double denom = (svd.singularValues().size() ? svd.singularValues()(0) : 0.0) * b.norm();
  return denom > 0.0 ? (a.transpose() * (a * x - b)).norm() / denom : 0.0;
}

}  // namespace detail

/// Solves min || sum c_i/(z - p_i) (+ e) - (1 + sum d_i/(z - p_i)) f ||
/// over the conjugation-closed samples with real-constrained coefficients.
inline VfCoefficients vf_iteration(const ClosedSamples& data, const std::vector<cplx>& poles, bool direct) {
  require(!poles.empty(), "vf_iteration: no poles");
  const auto blocks = detail::pair_blocks(poles);
  const Eigen::MatrixXcd basis = conjugate_basis(blocks);
  const Eigen::MatrixXcd phi = detail::cauchy(data, poles) * basis;
  const auto m = phi.rows();
  const auto n = phi.cols();
  Eigen::VectorXcd f(m);
  for (Eigen::Index k = 0; k < m; ++k) f(k) = data.f[static_cast<std::size_t>(k)];

  const Eigen::Index cols = 2 * n + (direct ? 1 : 0);
  Eigen::MatrixXcd a(m, cols);
  a.leftCols(n) = phi;
  if (direct) a.col(n) = Eigen::VectorXcd::Ones(m);
  a.rightCols(n) = -(f.asDiagonal() * phi);

  const Eigen::MatrixXd ar = stack_real(a);
  const Eigen::VectorXd br = stack_real(f);
  const auto ls = solve_least_squares(ar, br, 1e-12, true);

  VfCoefficients out;
  const Eigen::VectorXcd c = basis * ls.x.head(n).cast<cplx>();
  const Eigen::VectorXcd d = basis * ls.x.tail(n).cast<cplx>();
  out.numerator.assign(c.data(), c.data() + n);
  out.denominator.assign(d.data(), d.data() + n);
  out.direct = direct ? ls.x(n) : 0.0;
  out.residual = f.norm() > 0.0 ? ls.residual / f.norm() : ls.residual;
  out.certificate = detail::certificate(ar, ls.x, br);
  out.rank_deficient = ls.rank_deficient;
  return out;
}

/// Zeros of 1 + sum d_i/(s - p_i): eigenvalues of diag(p) - 1 d^T, computed
/// in real arithmetic so conjugate pairs come out exactly paired. With
/// `flip_unstable`, poles with positive real part are reflected.
inline std::vector<cplx> relocate_poles(const std::vector<cplx>& poles, const std::vector<cplx>& d,
                                        bool flip_unstable = false) {
  require(poles.size() == d.size(), "relocate_poles: pole/coefficient count mismatch");
  const auto n = static_cast<Eigen::Index>(poles.size());
  ComplexDescriptor c;
  c.E = Eigen::MatrixXcd::Identity(n, n);
  Eigen::VectorXcd p(n), dv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i) = poles[static_cast<std::size_t>(i)];
    dv(i) = d[static_cast<std::size_t>(i)];
  }
  c.A = Eigen::MatrixXcd(p.asDiagonal()) - Eigen::VectorXcd::Ones(n) * dv.transpose();
  c.B = Eigen::MatrixXcd::Zero(n, 1);
  c.C = Eigen::MatrixXcd::Zero(1, n);
  c.D = Eigen::MatrixXcd::Zero(1, 1);
  const DescriptorRealization real = realify(c, poles, poles);

  Eigen::EigenSolver<Eigen::MatrixXd> es(real.A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::solver_failure, "pole relocation eigenproblem failed");
  std::vector<cplx> next(es.eigenvalues().data(), es.eigenvalues().data() + n);
  for (auto& z : next) {
    if (detail::is_real_point(z)) z = cplx(z.real(), 0.0);
    if (flip_unstable && z.real() > 0.0) z = cplx(-z.real(), z.imag());
  }
  const auto order = conjugate_pair_order(next);
  std::vector<cplx> sorted;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const cplx z = next[order[k]];
    if (!detail::is_real_point(z) && k > 0 && !detail::is_real_point(sorted.back()) &&
        sorted.back().imag() > 0.0 && z.imag() < 0.0) {
      sorted.push_back(std::conj(sorted.back()));
    } else {
      sorted.push_back(z);
    }
  }
  return sorted;
}

/// max_k |new_k - old_k| under greedy nearest-neighbour matching.
inline double pole_movement(const std::vector<cplx>& previous, const std::vector<cplx>& next) {
  require(previous.size() == next.size(), "pole_movement: size mismatch");
  std::vector<bool> used(next.size(), false);
  double worst = 0.0;
  for (const cplx& p : previous) {
    std::size_t best = next.size();
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < next.size(); ++j) {
      if (!used[j] && std::abs(next[j] - p) < dist) {
        dist = std::abs(next[j] - p);
        best = j;
      }
    }
    used[best] = true;
    worst = std::max(worst, dist);
  }
  return worst;
}

struct VfOptions {
  std::size_t max_iters = 100;
  double pole_tol = 1e-8;  // relative to max(1, max |pole|)
  bool direct = false;
  bool flip_unstable = false;
  std::optional<std::vector<cplx>> init_poles;
};

struct VfIterationLog {
  std::size_t iter = 0;
  double pole_movement = 0.0;
  double ls_residual = 0.0;
  double certificate = 0.0;
  double denominator_norm = 0.0;  // ||d||
};

struct VfFit {
  PoleResidueModel model;
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  // final ||H(z) - f|| / ||f||
  std::vector<VfIterationLog> history;
};

/// Final residues (and direct term) with the poles frozen.
inline PoleResidueModel vf_residues(const ClosedSamples& data, const std::vector<cplx>& poles, bool direct,
                                    double* residual = nullptr) {
  const Eigen::MatrixXcd basis = conjugate_basis(detail::pair_blocks(poles));
  const Eigen::MatrixXcd phi = detail::cauchy(data, poles) * basis;
  const auto m = phi.rows();
  const auto n = phi.cols();
  Eigen::VectorXcd f(m);
  for (Eigen::Index k = 0; k < m; ++k) f(k) = data.f[static_cast<std::size_t>(k)];
  Eigen::MatrixXcd a(m, n + (direct ? 1 : 0));
  a.leftCols(n) = phi;
  if (direct) a.col(n) = Eigen::VectorXcd::Ones(m);
  const auto ls = solve_least_squares(stack_real(a), stack_real(f), 1e-12, true);
  PoleResidueModel model;
  model.poles = poles;
  const Eigen::VectorXcd c = basis * ls.x.head(n).cast<cplx>();
  model.residues.assign(c.data(), c.data() + n);
  model.direct = direct ? ls.x(n) : 0.0;
  if (residual) *residual = f.norm() > 0.0 ? ls.residual / f.norm() : ls.residual;
  return model;
}

inline VfFit vf_fit(const ClosedSamples& data, std::size_t n, const VfOptions& opts = {}) {
  require(n >= 1, "vf_fit: order must be at least 1");
  require(opts.max_iters >= 1, "vf_fit: max_iters must be at least 1");
  std::vector<cplx> poles;
  if (opts.init_poles) {
    require(opts.init_poles->size() == n, "vf_fit: initial pole count must equal the order");
    const auto order = conjugate_pair_order(*opts.init_poles);
    for (auto k : order) poles.push_back((*opts.init_poles)[k]);
  } else {
    double wmin = std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    for (cplx z : data.z) {
      const double w = std::abs(z.imag());
      if (w > 0.0) {
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
      }
    }
    require(wmax > 0.0, "vf_fit: no positive frequencies in data");
    poles = vf_init_poles(wmin, wmax, n);
  }

  VfFit fit;
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    const auto coeffs = vf_iteration(data, poles, opts.direct);
    auto next = relocate_poles(poles, coeffs.denominator, opts.flip_unstable);
    const double move = pole_movement(poles, next);
    double dnorm = 0.0;
    for (cplx d : coeffs.denominator) dnorm += std::norm(d);
    fit.history.push_back({it, move, coeffs.residual, coeffs.certificate, std::sqrt(dnorm)});
    poles = std::move(next);
    fit.iterations = it;
    double scale = 1.0;
    for (cplx p : poles) scale = std::max(scale, std::abs(p));
    if (move <= opts.pole_tol * scale) {
      fit.converged = true;
      break;
    }
  }
  fit.model = vf_residues(data, poles, opts.direct, &fit.residual);
  return fit;
}

inline VfFit vf_fit(const FrequencyDataset& data, std::size_t n, const VfOptions& opts = {}) {
  return vf_fit(close_under_conjugation(data), n, opts);
}

}  // namespace ddc
