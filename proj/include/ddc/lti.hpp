#pragma once

// Rational LTI model forms used throughout the toolkit: descriptor
// realizations, strictly proper barycentric forms, pole-residue forms and
// plain polynomial ratios. All models are continuous time.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

using cplx = std::complex<double>;

/// Scalar frequency-response function s -> H(s).
using Evaluator = std::function<cplx(cplx)>;

/// (E, A, B, C, D) with H(s) = C (sE - A)^{-1} B + D.
template <typename Scalar>
struct Descriptor {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix E, A, B, C, D;

  Eigen::Index order() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }

  void validate() const {
    const auto n = A.rows();
    require(A.cols() == n && E.rows() == n && E.cols() == n,
            "descriptor: E and A must be square of equal size");
    require(B.rows() == n, "descriptor: B row count must equal the state dimension");
    require(C.cols() == n, "descriptor: C column count must equal the state dimension");
    require(D.rows() == C.rows() && D.cols() == B.cols(),
            "descriptor: D must be outputs x inputs");
  }
};

using DescriptorRealization = Descriptor<double>;
using ComplexDescriptor = Descriptor<cplx>;

/// Strictly proper barycentric form
///   H(s) = sum_j w_j h_j / (s - z_j)  /  (1 + sum_j w_j / (s - z_j)).
struct BarycentricModel {
  std::vector<cplx> support;
  std::vector<cplx> values;
  std::vector<cplx> weights;

  std::size_t order() const { return support.size(); }
};

/// H(s) = sum_k r_k / (s - p_k) + d.
struct PoleResidueModel {
  std::vector<cplx> poles;
  std::vector<cplx> residues;
  double direct = 0.0;

  std::size_t order() const { return poles.size(); }
};

/// Real coefficients in descending powers of s; denominator monic.
struct RationalPolyForm {
  std::vector<double> num;
  std::vector<double> den;

  int num_degree() const { return static_cast<int>(num.size()) - 1; }
  int den_degree() const { return static_cast<int>(den.size()) - 1; }
};

namespace detail {

inline double pair_tolerance(cplx z) { return 1e-12 * std::max(1.0, std::abs(z)); }

inline bool is_real_point(cplx z) { return std::abs(z.imag()) <= pair_tolerance(z); }

/// Block sizes (1 or 2) for a list of points ordered so conjugate pairs are
/// adjacent. Throws cannot_realify when the list is not conjugation-closed.
inline std::vector<int> pair_blocks(std::span<const cplx> points) {
  std::vector<int> blocks;
  for (std::size_t i = 0; i < points.size();) {
    if (is_real_point(points[i])) {
      blocks.push_back(1);
      ++i;
      continue;
    }
    if (i + 1 >= points.size() ||
        std::abs(points[i + 1] - std::conj(points[i])) > pair_tolerance(points[i])) {
      throw Error(ErrorCode::cannot_realify,
                  "point " + std::to_string(i) + " has no adjacent conjugate partner",
                  points[i]);
    }
    blocks.push_back(2);
    i += 2;
  }
  return blocks;
}

/// Left transform (applied as T * M): blockdiag of [1, 1; -i, i] / sqrt(2).
inline Eigen::MatrixXcd left_real_transform(const std::vector<int>& blocks) {
  Eigen::Index n = 0;
  for (int b : blocks) n += b;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
  const double h = 1.0 / std::sqrt(2.0);
  const cplx i1(0.0, 1.0);
  Eigen::Index k = 0;
  for (int b : blocks) {
    if (b == 1) {
      t(k, k) = 1.0;
    } else {
      t(k, k) = h;
      t(k, k + 1) = h;
      t(k + 1, k) = -i1 * h;
      t(k + 1, k + 1) = i1 * h;
    }
    k += b;
  }
  return t;
}

/// Right transform (applied as M * T): the inverse of the left one, i.e.
/// blockdiag of [1, i; 1, -i] / sqrt(2).
inline Eigen::MatrixXcd right_real_transform(const std::vector<int>& blocks) {
  return left_real_transform(blocks).adjoint();
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd checked_real(const Eigen::MatrixXcd& m, double scale, const char* name) {
  const double imag = max_abs(m.imag());
  if (imag > 1e-8 * std::max(scale, 1e-300)) {
    throw Error(ErrorCode::cannot_realify,
                std::string("imaginary residue in ") + name + " after transform: " +
                    std::to_string(imag));
  }
  return m.real();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation

/// C (sE - A)^{-1} B + D as an outputs x inputs complex matrix.
template <typename Scalar>
Eigen::MatrixXcd eval_descriptor_matrix(const Descriptor<Scalar>& model, cplx s) {
  model.validate();
  const Eigen::MatrixXcd pencil =
      s * model.E.template cast<cplx>() - model.A.template cast<cplx>();
  Eigen::MatrixXcd result = model.D.template cast<cplx>();
  if (model.order() == 0) return result;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(pencil);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    throw Error(ErrorCode::evaluation_at_pole, "sE - A is singular", s);
  }
  result += model.C.template cast<cplx>() * lu.solve(model.B.template cast<cplx>());
  return result;
}

/// Scalar response of a SISO descriptor model.
template <typename Scalar>
cplx eval_descriptor(const Descriptor<Scalar>& model, cplx s) {
  require(model.inputs() == 1 && model.outputs() == 1, "eval_descriptor: model is not SISO");
  return eval_descriptor_matrix(model, s)(0, 0);
}

inline cplx eval_barycentric(const BarycentricModel& model, cplx s) {
  cplx num = 0.0;
  cplx den = 1.0;
  for (std::size_t j = 0; j < model.support.size(); ++j) {
    const cplx diff = s - model.support[j];
    if (diff == cplx(0.0)) return model.values[j];
    const cplx q = model.weights[j] / diff;
    num += q * model.values[j];
    den += q;
  }
  return num / den;
}

inline cplx eval_pole_residue(const PoleResidueModel& model, cplx s) {
  cplx sum = model.direct;
  for (std::size_t k = 0; k < model.poles.size(); ++k) {
    const cplx diff = s - model.poles[k];
    if (diff == cplx(0.0)) throw Error(ErrorCode::evaluation_at_pole, "s equals a pole", s);
    sum += model.residues[k] / diff;
  }
  return sum;
}

inline cplx eval_poly(std::span<const double> coeffs, cplx s) {
  cplx acc = 0.0;
  for (double c : coeffs) acc = acc * s + c;
  return acc;
}

inline cplx eval_poly_form(const RationalPolyForm& model, cplx s) {
  const cplx den = eval_poly(model.den, s);
  if (den == cplx(0.0)) throw Error(ErrorCode::evaluation_at_pole, "denominator vanishes", s);
  return eval_poly(model.num, s) / den;
}

inline Evaluator make_evaluator(DescriptorRealization model) {
  return [m = std::move(model)](cplx s) { return eval_descriptor(m, s); };
}
inline Evaluator make_evaluator(BarycentricModel model) {
  return [m = std::move(model)](cplx s) { return eval_barycentric(m, s); };
}
inline Evaluator make_evaluator(PoleResidueModel model) {
  return [m = std::move(model)](cplx s) { return eval_pole_residue(m, s); };
}
inline Evaluator make_evaluator(RationalPolyForm model) {
  return [m = std::move(model)](cplx s) { return eval_poly_form(m, s); };
}

// ---------------------------------------------------------------------------
// Poles

struct PoleSet {
  std::vector<cplx> finite;
  std::size_t infinite = 0;
};

/// Eigenvalues beyond this magnitude belong to the polynomial part.
inline constexpr double kInfiniteEigenvalue = 1e12;

/// Finite generalized eigenvalues of (A, E).
inline PoleSet poles_of(const DescriptorRealization& model) {
  model.validate();
  const auto n = model.order();
  PoleSet out;
  if (n == 0) return out;
  require(model.E.cwiseAbs().maxCoeff() > 0.0, "poles_of: E is identically zero");

  // A pencil singular for every s has det(sE - A) == 0 identically.
  const double scale = std::max(1.0, std::max(detail::max_abs(model.A), detail::max_abs(model.E)));
  bool regular = false;
  for (cplx s : {cplx(0.37, 0.71), cplx(-1.13, 2.29), cplx(1.71, -0.43)}) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(scale * s * model.E.cast<cplx>() -
                                          model.A.cast<cplx>());
    if (lu.rank() == n) {
      regular = true;
      break;
    }
  }
  if (!regular) throw Error(ErrorCode::degenerate_pencil, "sE - A is singular for all s");

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(model.A, model.E, false);
  if (ges.info() != Eigen::Success) {
    throw Error(ErrorCode::solver_failure, "generalized eigenvalue iteration failed");
  }
  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (betas(k) == 0.0) {
      ++out.infinite;
      continue;
    }
    const cplx lambda = alphas(k) / betas(k);
    if (!std::isfinite(std::abs(lambda)) || std::abs(lambda) > kInfiniteEigenvalue) {
      ++out.infinite;
    } else {
      out.finite.push_back(lambda);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Real form

/// Maps a complex realization whose rows are indexed by `row_points` and
/// columns by `col_points` (both conjugation-closed, pairs adjacent) to an
/// equivalent real realization. Rows are combined with the unitary block
/// [1, 1; -i, i]/sqrt(2), columns with its inverse, so the transfer function
/// is unchanged.
inline DescriptorRealization realify(const ComplexDescriptor& model,
                                     std::span<const cplx> row_points,
                                     std::span<const cplx> col_points) {
  model.validate();
  require(static_cast<Eigen::Index>(row_points.size()) == model.order() &&
              static_cast<Eigen::Index>(col_points.size()) == model.order(),
          "realify: point lists must match the state dimension");
  const auto left = detail::left_real_transform(detail::pair_blocks(row_points));
  const auto right = detail::right_real_transform(detail::pair_blocks(col_points));

  const double scale = std::max({detail::max_abs(model.E), detail::max_abs(model.A),
                                 detail::max_abs(model.B), detail::max_abs(model.C),
                                 detail::max_abs(model.D)});
  DescriptorRealization out;
  out.E = detail::checked_real(left * model.E * right, scale, "E");
  out.A = detail::checked_real(left * model.A * right, scale, "A");
  out.B = detail::checked_real(left * model.B, scale, "B");
  out.C = detail::checked_real(model.C * right, scale, "C");
  out.D = detail::checked_real(model.D, scale, "D");
  return out;
}

/// Realify a rectangular row/column-structured block (used for Loewner
/// pencils before projection).
inline Eigen::MatrixXd realify_block(const Eigen::MatrixXcd& m, std::span<const cplx> row_points,
                                     std::span<const cplx> col_points) {
  const auto left = detail::left_real_transform(detail::pair_blocks(row_points));
  const auto right = detail::right_real_transform(detail::pair_blocks(col_points));
  return detail::checked_real(left * m * right, detail::max_abs(m), "block");
}

/// Realify only the row structure (B-like blocks).
inline Eigen::MatrixXd realify_rows(const Eigen::MatrixXcd& m, std::span<const cplx> row_points) {
  const auto left = detail::left_real_transform(detail::pair_blocks(row_points));
  return detail::checked_real(left * m, detail::max_abs(m), "rows");
}

/// Realify only the column structure (C-like blocks).
inline Eigen::MatrixXd realify_cols(const Eigen::MatrixXcd& m, std::span<const cplx> col_points) {
  const auto right = detail::right_real_transform(detail::pair_blocks(col_points));
  return detail::checked_real(m * right, detail::max_abs(m), "cols");
}

// ---------------------------------------------------------------------------
// Conversions

/// Reorders conjugation-closed values so each pair is adjacent with the
/// positive-imaginary member first; real values stay singletons. Returns the
/// permutation applied.
inline std::vector<std::size_t> conjugate_pair_order(std::span<const cplx> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order;
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    const cplx z = values[i];
    if (detail::is_real_point(z)) {
      used[i] = true;
      order.push_back(i);
      continue;
    }
    std::size_t best = n;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || j == i) continue;
      const double d = std::abs(values[j] - std::conj(z));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best == n || best_dist > 1e-8 * std::max(1.0, std::abs(z))) {
      throw Error(ErrorCode::cannot_realify, "value has no conjugate partner", z);
    }
    used[i] = used[best] = true;
    if (z.imag() > 0) {
      order.push_back(i);
      order.push_back(best);
    } else {
      order.push_back(best);
      order.push_back(i);
    }
  }
  return order;
}

/// Real descriptor realization (I, diag(poles), 1, residues, direct).
inline DescriptorRealization to_descriptor(const PoleResidueModel& model) {
  const auto perm = conjugate_pair_order(model.poles);
  const auto n = static_cast<Eigen::Index>(perm.size());
  ComplexDescriptor c;
  c.E = Eigen::MatrixXcd::Identity(n, n);
  c.A = Eigen::MatrixXcd::Zero(n, n);
  c.B = Eigen::MatrixXcd::Ones(n, 1);
  c.C = Eigen::MatrixXcd::Zero(1, n);
  c.D = Eigen::MatrixXcd::Constant(1, 1, model.direct);
  std::vector<cplx> pts(perm.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = perm[static_cast<std::size_t>(k)];
    pts[static_cast<std::size_t>(k)] = model.poles[src];
    c.A(k, k) = model.poles[src];
    c.C(0, k) = model.residues[src];
  }
  return realify(c, pts, pts);
}

/// Diagonalizes a SISO descriptor realization with invertible E.
inline PoleResidueModel to_pole_residue(const DescriptorRealization& model) {
  model.validate();
  require(model.inputs() == 1 && model.outputs() == 1, "to_pole_residue: model is not SISO");
  PoleResidueModel out;
  out.direct = model.D(0, 0);
  const auto n = model.order();
  if (n == 0) return out;
  Eigen::PartialPivLU<Eigen::MatrixXd> elu(model.E);
  if (!(elu.rcond() > 1e-13)) {
    throw Error(ErrorCode::coefficient_form_refused,
                "E is singular; pole-residue form needs a proper model");
  }
  const Eigen::MatrixXd a = elu.solve(model.A);
  const Eigen::MatrixXd b = elu.solve(model.B);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, true);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::solver_failure, "eigenvalue iteration failed");
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::PartialPivLU<Eigen::MatrixXcd> vlu(v);
  if (!(vlu.rcond() > 1e-13)) {
    throw Error(ErrorCode::solver_failure, "state matrix is (numerically) defective");
  }
  const Eigen::VectorXcd left = vlu.solve(b.cast<cplx>());
  const Eigen::RowVectorXcd right = model.C.cast<cplx>() * v;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.poles.push_back(es.eigenvalues()(k));
    out.residues.push_back(right(k) * left(k));
  }
  return out;
}

namespace detail {

using CPoly = std::vector<cplx>;  // descending powers

inline CPoly poly_mul_root(const CPoly& p, cplx root) {
  CPoly out(p.size() + 1, cplx(0.0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] += p[i];
    out[i + 1] -= root * p[i];
  }
  return out;
}

inline CPoly poly_from_roots(std::span<const cplx> roots, std::size_t skip) {
  CPoly p{cplx(1.0)};
  for (std::size_t j = 0; j < roots.size(); ++j) {
    if (j != skip) p = poly_mul_root(p, roots[j]);
  }
  return p;
}

inline void poly_axpy(CPoly& acc, cplx a, const CPoly& p) {
  // acc and p are aligned at the lowest power.
  const std::size_t off = acc.size() - p.size();
  for (std::size_t i = 0; i < p.size(); ++i) acc[off + i] += a * p[i];
}

inline std::vector<double> real_coeffs(const CPoly& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i].real();
  return out;
}

inline std::vector<double> strip_leading_zeros(std::vector<double> p, double scale) {
  std::size_t lead = 0;
  while (lead + 1 < p.size() && std::abs(p[lead]) <= 1e-14 * scale) ++lead;
  p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(lead));
  return p;
}

}  // namespace detail

/// Coefficient forms are refused beyond this order.
inline constexpr std::size_t kMaxPolyOrder = 30;

inline RationalPolyForm to_poly_form(const PoleResidueModel& model) {
  const std::size_t n = model.order();
  if (n > kMaxPolyOrder) {
    throw Error(ErrorCode::coefficient_form_refused, "order " + std::to_string(n) + " > 30");
  }
  const detail::CPoly den = detail::poly_from_roots(model.poles, n);
  detail::CPoly num(n + 1, cplx(0.0));
  for (std::size_t k = 0; k < n; ++k) {
    detail::poly_axpy(num, model.residues[k], detail::poly_from_roots(model.poles, k));
  }
  if (model.direct != 0.0) detail::poly_axpy(num, model.direct, den);
  RationalPolyForm out;
  out.den = detail::real_coeffs(den);
  const auto raw = detail::real_coeffs(num);
  double scale = 0.0;
  for (double c : raw) scale = std::max(scale, std::abs(c));
  out.num = detail::strip_leading_zeros(raw, scale);
  return out;
}

inline RationalPolyForm to_poly_form(const BarycentricModel& model) {
  const std::size_t n = model.order();
  if (n > kMaxPolyOrder) {
    throw Error(ErrorCode::coefficient_form_refused, "order " + std::to_string(n) + " > 30");
  }
  detail::CPoly den = detail::poly_from_roots(model.support, n);
  detail::CPoly num(n + 1, cplx(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const detail::CPoly others = detail::poly_from_roots(model.support, j);
    detail::poly_axpy(den, model.weights[j], others);
    detail::poly_axpy(num, model.weights[j] * model.values[j], others);
  }
  RationalPolyForm out;
  out.den = detail::real_coeffs(den);
  const auto raw = detail::real_coeffs(num);
  double scale = 0.0;
  for (double c : raw) scale = std::max(scale, std::abs(c));
  out.num = detail::strip_leading_zeros(raw, scale);
  return out;
}

inline RationalPolyForm to_poly_form(const DescriptorRealization& model) {
  if (static_cast<std::size_t>(model.order()) > kMaxPolyOrder) {
    throw Error(ErrorCode::coefficient_form_refused,
                "order " + std::to_string(model.order()) + " > 30");
  }
  return to_poly_form(to_pole_residue(model));
}

inline RationalPolyForm to_poly_form(const RationalPolyForm& model) { return model; }

}  // namespace ddc
