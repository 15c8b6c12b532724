#pragma once

// Strictly proper, real-enforcing AAA: greedy support selection with a
// linearized least-squares solve for the barycentric weights.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/linalg.hpp"
#include "ddc/lti.hpp"
#include "ddc/plant_data.hpp"

namespace ddc {

/// Samples closed under conjugation: index 2k is i w_k, index 2k+1 its
/// conjugate.
struct ClosedSamples {
  std::vector<cplx> z;
  std::vector<cplx> f;

  std::size_t size() const { return z.size(); }

  /// Index of the conjugate partner (itself for real points).
  std::size_t partner(std::size_t k) const {
    return detail::is_real_point(z[k]) ? k : (k ^ std::size_t{1});
  }
};

inline ClosedSamples close_under_conjugation(const FrequencyDataset& data) {
  data.validate();
  ClosedSamples out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const cplx s(0.0, data.omega[i]);
    out.z.push_back(s);
    out.f.push_back(data.values[i]);
    out.z.push_back(std::conj(s));
    out.f.push_back(std::conj(data.values[i]));
  }
  return out;
}

struct AaaState {
  std::vector<std::size_t> support;  // indices of nu_j into the sample list
  std::vector<std::size_t> active;   // indices of eta_i, ascending
  std::vector<cplx> weights;
  cplx mean = 0.0;                   // H_0
  std::size_t ell = 0;
  bool rank_deficient = false;       // last weight solve
  double certificate = 0.0;          // last normal-equations residual, relative

  /// Current approximant; H_0 is the constant mean.
  BarycentricModel model(const ClosedSamples& data) const {
    BarycentricModel m;
    for (std::size_t j = 0; j < support.size(); ++j) {
      m.support.push_back(data.z[support[j]]);
      m.values.push_back(data.f[support[j]]);
      m.weights.push_back(weights[j]);
    }
    return m;
  }

  cplx evaluate(const ClosedSamples& data, std::size_t k) const {
    if (support.empty()) return mean;
    return eval_barycentric(model(data), data.z[k]);
  }
};

inline AaaState aaa_init(const ClosedSamples& data) {
  require(data.size() > 0, "aaa_init: no data");
  AaaState st;
  st.active.resize(data.size());
  std::iota(st.active.begin(), st.active.end(), std::size_t{0});
  st.mean = std::accumulate(data.f.begin(), data.f.end(), cplx(0.0)) / static_cast<double>(data.size());
  return st;
}

/// |f_k - H(z_k)| for every sample (zero on the support set).
inline std::vector<double> aaa_errors(const AaaState& st, const ClosedSamples& data) {
  std::vector<double> err(data.size(), 0.0);
  const auto m = st.model(data);
  for (std::size_t k : st.active) {
    const cplx h = st.support.empty() ? st.mean : eval_barycentric(m, data.z[k]);
    err[k] = std::abs(data.f[k] - h);
  }
  return err;
}

/// Moves the active point of largest error (lowest index on ties) into the
/// support set, together with its conjugate partner. Returns the index.
inline std::size_t greedy_select(AaaState& st, const std::vector<double>& errors,
                                 const ClosedSamples& data) {
  if (st.active.empty()) throw Error(ErrorCode::data_exhausted, "no active points left");
  std::size_t best = st.active.front();
  for (std::size_t k : st.active) {
    if (errors[k] > errors[best]) best = k;
  }
  const std::size_t mate = data.partner(best);
  st.support.push_back(best);
  if (mate != best) st.support.push_back(mate);
  std::erase_if(st.active, [&](std::size_t k) { return k == best || k == mate; });
  st.ell = st.support.size();
  return best;
}

/// Minimizes ||L a + f|| over the active rows, L_kj = (f_k - h_j)/(z_k - nu_j),
/// with conjugate-pair weights constrained to be conjugate.
inline void solve_weights(AaaState& st, const ClosedSamples& data) {
  require(!st.support.empty(), "solve_weights: empty support set");
  const auto rows = static_cast<Eigen::Index>(st.active.size());
  const auto cols = static_cast<Eigen::Index>(st.support.size());
  if (rows == 0) {
    // Every point interpolated: any nonzero weights work, pick the pure interpolant limit.
    st.weights.assign(st.support.size(), cplx(1.0));
    st.certificate = 0.0;
    st.rank_deficient = true;
    return;
  }
  Eigen::MatrixXcd L(rows, cols);
  Eigen::VectorXcd f(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t k = st.active[static_cast<std::size_t>(r)];
    f(r) = data.f[k];
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::size_t j = st.support[static_cast<std::size_t>(c)];
      L(r, c) = (data.f[k] - data.f[j]) / (data.z[k] - data.z[j]);
    }
  }
  std::vector<cplx> nodes;
  for (std::size_t j : st.support) nodes.push_back(data.z[j]);
  const Eigen::MatrixXcd basis = conjugate_basis(detail::pair_blocks(nodes));
  const auto ls = solve_least_squares(stack_real(Eigen::MatrixXcd(L * basis)), stack_real(Eigen::VectorXcd(-f)));
  const Eigen::VectorXcd alpha = basis * ls.x.cast<cplx>();
  st.weights.assign(alpha.data(), alpha.data() + alpha.size());
  st.rank_deficient = ls.rank_deficient;

  const Eigen::VectorXcd resid = L * alpha + f;
  Eigen::JacobiSVD<Eigen::MatrixXcd> nsvd(L);
  const double lnorm = nsvd.singularValues().size() ? nsvd.singularValues()(0) : 0.0;
  const double denom = lnorm * f.norm();
  st.certificate = denom > 0.0 ? (L.adjoint() * resid).norm() / denom : 0.0;
}

enum class AaaExit { tolerance, order_cap, data_exhausted };

struct AaaIteration {
  std::size_t ell = 0;
  double max_error = 0.0;
  double selected_omega = 0.0;  // 0 for the initial constant
  double certificate = 0.0;
  bool rank_deficient = false;
};

struct AaaFit {
  BarycentricModel model;
  cplx constant = 0.0;  // used only when the order is 0
  AaaExit exit = AaaExit::tolerance;
  std::vector<AaaIteration> history;

  std::size_t order() const { return model.order(); }

  cplx evaluate(cplx s) const {
    return model.order() == 0 ? constant : eval_barycentric(model, s);
  }
};

/// Greedy loop: while max_k |f_k - H(z_k)| > tol and ell < max_order. Each
/// greedy round adds a conjugate pair, so an odd cap may be exceeded by one.
inline AaaFit aaa_fit(const ClosedSamples& data, double tol, std::size_t max_order) {
  require(tol > 0.0, "aaa_fit: tolerance must be positive");
  require(max_order >= 1, "aaa_fit: maximum order must be at least 1");
  AaaState st = aaa_init(data);
  AaaFit fit;
  auto errors = aaa_errors(st, data);
  double err = *std::max_element(errors.begin(), errors.end());
  fit.history.push_back({0, err, 0.0, 0.0, false});
  while (err > tol && st.ell < max_order) {
    if (st.active.empty()) {
      fit.exit = AaaExit::data_exhausted;
      break;
    }
    const std::size_t pick = greedy_select(st, errors, data);
    solve_weights(st, data);
    errors = aaa_errors(st, data);
    err = *std::max_element(errors.begin(), errors.end());
    fit.history.push_back({st.ell, err, std::abs(data.z[pick].imag()), st.certificate, st.rank_deficient});
  }
  if (fit.exit != AaaExit::data_exhausted) fit.exit = err <= tol ? AaaExit::tolerance : AaaExit::order_cap;
  fit.model = st.model(data);
  fit.constant = st.mean;
  return fit;
}

inline AaaFit aaa_fit(const FrequencyDataset& data, double tol, std::size_t max_order) {
  return aaa_fit(close_under_conjugation(data), tol, max_order);
}

/// (I, diag(nu) - B 1^T, B = weights, C = values), then real form.
inline DescriptorRealization barycentric_to_realization(const BarycentricModel& model) {
  const auto n = static_cast<Eigen::Index>(model.order());
  ComplexDescriptor c;
  c.E = Eigen::MatrixXcd::Identity(n, n);
  c.B.resize(n, 1);
  c.C.resize(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    c.B(j, 0) = model.weights[static_cast<std::size_t>(j)];
    c.C(0, j) = model.values[static_cast<std::size_t>(j)];
  }
  Eigen::VectorXcd nu(n);
  for (Eigen::Index j = 0; j < n; ++j) nu(j) = model.support[static_cast<std::size_t>(j)];
  c.A = Eigen::MatrixXcd(nu.asDiagonal()) - c.B * Eigen::RowVectorXcd::Ones(n);
  c.D = Eigen::MatrixXcd::Zero(1, 1);
  return realify(c, model.support, model.support);
}

}  // namespace ddc
