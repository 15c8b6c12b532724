#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#include <vector>

namespace ddc {

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
  double residual = 0.0;  // ||M x - b||
};

/// Minimum-norm least squares by SVD with a relative singular-value cutoff.
/// When `equilibrate` is set, columns are scaled to unit norm first (the
/// minimum-norm property then holds in the scaled variables).
inline LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& m, const Eigen::VectorXd& b,
                                              double cutoff = 1e-12, bool equilibrate = false) {
  LeastSquaresResult out;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(m.cols());
  Eigen::MatrixXd a = m;
  if (equilibrate) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double nrm = a.col(j).norm();
      if (nrm > 0.0) {
        scale(j) = 1.0 / nrm;
        a.col(j) *= scale(j);
      }
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(cutoff);
  out.x = scale.asDiagonal() * svd.solve(b);
  out.rank = svd.rank();
  out.rank_deficient = out.rank < std::min(a.rows(), a.cols());
  out.residual = (m * out.x - b).norm();
  return out;
}

/// [Re M; Im M] for stacking complex equations with real unknowns.
inline Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXd out(2 * m.rows(), m.cols());
  out << m.real(), m.imag();
  return out;
}

inline Eigen::VectorXd stack_real(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

/// Real parametrization of a conjugation-closed complex coefficient vector.
/// `blocks` holds 1 (real entry) or 2 (adjacent conjugate pair); a pair is
/// (x + iy, x - iy) with real unknowns (x, y).
inline Eigen::MatrixXcd conjugate_basis(const std::vector<int>& blocks) {
  Eigen::Index n = 0;
  for (int b : blocks) n += b;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index k = 0;
  const std::complex<double> i1(0.0, 1.0);
  for (int b : blocks) {
    if (b == 1) {
      t(k, k) = 1.0;
    } else {
      t(k, k) = 1.0;
      t(k, k + 1) = i1;
      t(k + 1, k) = 1.0;
      t(k + 1, k + 1) = -i1;
    }
    k += b;
  }
  return t;
}

}  // namespace ddc
