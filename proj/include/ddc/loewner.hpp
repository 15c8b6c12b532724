#pragma once

// Tangential Loewner interpolation: pencil assembly, rank-revealing order
// detection and SVD projection to a real descriptor model.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/lti.hpp"
#include "ddc/plant_data.hpp"

namespace ddc {

/// Row data (mu_j, l_j, v_j^H) with v_j^H = l_j^H H(mu_j).
struct LeftData {
  std::vector<cplx> points;
  std::vector<Eigen::VectorXcd> directions;  // l_j, n_y entries
  std::vector<Eigen::RowVectorXcd> values;   // v_j^H, n_u entries

  std::size_t size() const { return points.size(); }
};

/// Column data (lambda_i, r_i, w_i) with w_i = H(lambda_i) r_i.
struct RightData {
  std::vector<cplx> points;
  std::vector<Eigen::VectorXcd> directions;  // r_i, n_u entries
  std::vector<Eigen::VectorXcd> values;      // w_i, n_y entries

  std::size_t size() const { return points.size(); }
};

struct LoewnerPencil {
  Eigen::MatrixXcd L;   // Loewner matrix, left x right
  Eigen::MatrixXcd Ls;  // shifted Loewner matrix
  Eigen::MatrixXcd V;   // rows v_j^H
  Eigen::MatrixXcd W;   // columns w_i
  LeftData left;
  RightData right;
};

/// Splits SISO samples into conjugation-closed left/right sets: samples at
/// odd positions (1-based) of the frequency-ordered list go left, even
/// positions go right; each contributes the pair (i w, -i w).
inline std::pair<LeftData, RightData> partition_data(const FrequencyDataset& data) {
  if (data.size() < 2) throw Error(ErrorCode::invalid_argument, "Loewner needs at least 2 distinct points");
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (!(data.omega[i] > data.omega[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "frequencies must be distinct and increasing");
    }
  }
  data.validate();
  LeftData left;
  RightData right;
  const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(1);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const cplx s(0.0, data.omega[k]);
    const cplx f = data.values[k];
    if (k % 2 == 0) {
      for (auto [z, v] : {std::pair{s, f}, std::pair{std::conj(s), std::conj(f)}}) {
        left.points.push_back(z);
        left.directions.push_back(one);
        left.values.push_back(Eigen::RowVectorXcd::Constant(1, v));
      }
    } else {
      for (auto [z, v] : {std::pair{s, f}, std::pair{std::conj(s), std::conj(f)}}) {
        right.points.push_back(z);
        right.directions.push_back(one);
        right.values.push_back(Eigen::VectorXcd::Constant(1, v));
      }
    }
  }
  return {std::move(left), std::move(right)};
}

/// MIMO variant: samples H(i w_k) (n_y x n_u) with one direction per sample
/// (left directions for odd positions, right directions for even ones).
inline std::pair<LeftData, RightData> partition_tangential(
    const std::vector<double>& omega, const std::vector<Eigen::MatrixXcd>& values,
    const std::vector<Eigen::VectorXcd>& left_dirs, const std::vector<Eigen::VectorXcd>& right_dirs) {
  require(omega.size() == values.size(), "partition_tangential: size mismatch");
  require(omega.size() >= 2, "partition_tangential: need at least 2 points");
  LeftData left;
  RightData right;
  std::size_t nl = 0;
  std::size_t nr = 0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    require(omega[k] > 0.0 && (k == 0 || omega[k] > omega[k - 1]),
            "partition_tangential: frequencies must be positive and increasing");
    const cplx s(0.0, omega[k]);
    const Eigen::MatrixXcd& h = values[k];
    if (k % 2 == 0) {
      require(nl < left_dirs.size(), "partition_tangential: not enough left directions");
      const Eigen::VectorXcd& l = left_dirs[nl++];
      left.points.push_back(s);
      left.directions.push_back(l);
      left.values.push_back(l.adjoint() * h);
      left.points.push_back(std::conj(s));
      left.directions.push_back(l.conjugate());
      left.values.push_back((l.adjoint() * h).conjugate());
    } else {
      require(nr < right_dirs.size(), "partition_tangential: not enough right directions");
      const Eigen::VectorXcd& r = right_dirs[nr++];
      right.points.push_back(s);
      right.directions.push_back(r);
      right.values.push_back(h * r);
      right.points.push_back(std::conj(s));
      right.directions.push_back(r.conjugate());
      right.values.push_back((h * r).conjugate());
    }
  }
  return {std::move(left), std::move(right)};
}

inline LoewnerPencil build_pencil(LeftData left, RightData right) {
  const auto m = static_cast<Eigen::Index>(left.size());
  const auto q = static_cast<Eigen::Index>(right.size());
  require(m > 0 && q > 0, "build_pencil: both sides must be nonempty");
  const auto n_u = left.values.front().size();
  const auto n_y = right.values.front().size();

  LoewnerPencil p;
  p.L.resize(m, q);
  p.Ls.resize(m, q);
  p.V.resize(m, n_u);
  p.W.resize(n_y, q);
  for (Eigen::Index j = 0; j < m; ++j) {
    require(left.values[j].size() == n_u && left.directions[j].size() == n_y,
            "build_pencil: inconsistent left dimensions");
    p.V.row(j) = left.values[j];
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    require(right.values[i].size() == n_y && right.directions[i].size() == n_u,
            "build_pencil: inconsistent right dimensions");
    p.W.col(i) = right.values[i];
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const cplx mu = left.points[j];
    for (Eigen::Index i = 0; i < q; ++i) {
      const cplx lambda = right.points[i];
      const cplx gap = mu - lambda;
      if (std::abs(gap) <= 1e-14 * std::max(1.0, std::abs(mu))) {
        throw Error(ErrorCode::point_collision,
                    "left point " + std::to_string(j) + " equals right point " + std::to_string(i), mu);
      }
      const cplx vr = (left.values[j] * right.directions[i])(0, 0);
      const cplx lw = (left.directions[j].adjoint() * right.values[i])(0, 0);
      p.L(j, i) = (vr - lw) / gap;
      p.Ls(j, i) = (mu * vr - lambda * lw) / gap;
    }
  }
  p.left = std::move(left);
  p.right = std::move(right);
  return p;
}

/// Relative singular-value threshold used when none is given.
inline constexpr double kDefaultRankTolerance = 1e-10;

struct OrderReport {
  std::size_t order = 0;                 // numerical rank of [L, Ls]
  std::vector<double> singular_values;   // of [L, Ls], descending
  std::size_t column_rank = 0;           // rank of [L; Ls]
  std::vector<std::size_t> pencil_ranks; // rank of z L - Ls at sampled data points
  double tolerance = kDefaultRankTolerance;
};

namespace detail {

inline std::size_t numerical_rank(const Eigen::VectorXd& sigma, double tol) {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) / sigma(0) > tol) ++r;
  }
  return r;
}

inline Eigen::MatrixXcd hcat(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

inline Eigen::MatrixXcd vcat(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace detail

inline OrderReport detect_order(const LoewnerPencil& pencil, double tol = kDefaultRankTolerance) {
  require(pencil.L.size() > 0, "detect_order: empty pencil");
  require(tol > 0.0 && tol < 1.0, "detect_order: tolerance must lie in (0, 1)");
  OrderReport rep;
  rep.tolerance = tol;
  Eigen::BDCSVD<Eigen::MatrixXcd> row_svd(detail::hcat(pencil.L, pencil.Ls));
  const Eigen::VectorXd sigma = row_svd.singularValues();
  rep.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
  rep.order = detail::numerical_rank(sigma, tol);

  Eigen::BDCSVD<Eigen::MatrixXcd> col_svd(detail::vcat(pencil.L, pencil.Ls));
  rep.column_rank = detail::numerical_rank(col_svd.singularValues(), tol);

  // A handful of data points suffices for the consistency check.
  std::vector<cplx> probes;
  for (std::size_t k = 0; k < pencil.left.size() && probes.size() < 2; k += 2) probes.push_back(pencil.left.points[k]);
  for (std::size_t k = 0; k < pencil.right.size() && probes.size() < 4; k += 2) probes.push_back(pencil.right.points[k]);
  for (cplx z : probes) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(z * pencil.L - pencil.Ls);
    rep.pencil_ranks.push_back(detail::numerical_rank(svd.singularValues(), tol));
  }
  return rep;
}

/// Raw full-size realization (E, A, B, C) = (-L, -Ls, V, W).
inline ComplexDescriptor loewner_realize(const LoewnerPencil& pencil) {
  require(pencil.L.rows() == pencil.L.cols(), "loewner_realize: pencil must be square");
  ComplexDescriptor d;
  d.E = -pencil.L;
  d.A = -pencil.Ls;
  d.B = pencil.V;
  d.C = pencil.W;
  d.D = Eigen::MatrixXcd::Zero(pencil.W.rows(), pencil.V.cols());
  return d;
}

struct ReducedModel {
  DescriptorRealization model;
  std::vector<std::string> warnings;
};

/// Projects the (realified) pencil onto its leading r singular directions:
/// Y from [L, Ls], X from [L; Ls].
inline ReducedModel loewner_reduce(const LoewnerPencil& pencil, std::size_t r) {
  const auto m = static_cast<std::size_t>(std::min(pencil.L.rows(), pencil.L.cols()));
  require(r >= 1, "loewner_reduce: order must be at least 1");
  require(r <= m, "loewner_reduce: order " + std::to_string(r) + " exceeds pencil size " + std::to_string(m));
  const auto& mu = pencil.left.points;
  const auto& lambda = pencil.right.points;
  const Eigen::MatrixXd L = realify_block(pencil.L, mu, lambda);
  const Eigen::MatrixXd Ls = realify_block(pencil.Ls, mu, lambda);
  const Eigen::MatrixXd V = realify_rows(pencil.V, mu);
  const Eigen::MatrixXd W = realify_cols(pencil.W, lambda);

  Eigen::MatrixXd row_form(L.rows(), 2 * L.cols());
  row_form << L, Ls;
  Eigen::MatrixXd col_form(2 * L.rows(), L.cols());
  col_form << L, Ls;
  Eigen::BDCSVD<Eigen::MatrixXd> ysvd(row_form, Eigen::ComputeThinU);
  Eigen::BDCSVD<Eigen::MatrixXd> xsvd(col_form, Eigen::ComputeThinV);
  const auto ri = static_cast<Eigen::Index>(r);
  const Eigen::MatrixXd Y = ysvd.matrixU().leftCols(ri);
  const Eigen::MatrixXd X = xsvd.matrixV().leftCols(ri);

  ReducedModel out;
  out.model.E = -Y.transpose() * L * X;
  out.model.A = -Y.transpose() * Ls * X;
  out.model.B = Y.transpose() * V;
  out.model.C = W * X;
  out.model.D = Eigen::MatrixXd::Zero(W.rows(), V.cols());

  Eigen::JacobiSVD<Eigen::MatrixXd> esvd(out.model.E);
  const auto& es = esvd.singularValues();
  if (es.size() > 0 && (es(0) == 0.0 || es(es.size() - 1) / es(0) < 1e-12)) {
    out.warnings.push_back(
        "projected E is numerically singular: the data may carry a feedthrough or polynomial part");
  }
  return out;
}

struct LoewnerFit {
  DescriptorRealization model;
  OrderReport report;
  std::size_t order = 0;
  std::vector<std::string> warnings;
};

/// partition -> pencil -> (order detection) -> projection -> real model.
inline LoewnerFit loewner_fit(const FrequencyDataset& data, std::optional<std::size_t> order = std::nullopt,
                              double tol = kDefaultRankTolerance) {
  if (order && *order == 0) throw Error(ErrorCode::invalid_argument, "Loewner order must be at least 1");
  auto [left, right] = partition_data(data);
  const LoewnerPencil pencil = build_pencil(std::move(left), std::move(right));
  LoewnerFit fit;
  fit.report = detect_order(pencil, tol);
  fit.order = order ? *order : fit.report.order;
  if (fit.order == 0) throw Error(ErrorCode::invalid_argument, "data has numerical rank 0; nothing to fit");
  auto reduced = loewner_reduce(pencil, fit.order);
  fit.model = std::move(reduced.model);
  fit.warnings = std::move(reduced.warnings);
  return fit;
}

}  // namespace ddc
