#pragma once

// Model-reference data-driven control: ideal-controller samples, engine
// dispatch, unity-feedback closed loop and design evaluation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ddc/aaa.hpp"
#include "ddc/errors.hpp"
#include "ddc/loewner.hpp"
#include "ddc/lti.hpp"
#include "ddc/plant_data.hpp"
#include "ddc/response.hpp"
#include "ddc/vf.hpp"

namespace ddc {

/// K*(i w_i) samples with the reference member used for each.
struct IdealControllerData {
  FrequencyDataset data;
  std::vector<std::size_t> member;
};

/// Saturation guard for |1 - M_j(i w_i)|.
inline constexpr double kReferenceGuard = 1e-12;

/// K*_i = M_j(i w_i) / (Phi_i (1 - M_j(i w_i))), j = partition[i].
inline IdealControllerData ideal_controller_samples(const FrequencyDataset& plant, const ReferenceFamily& family) {
  plant.validate();
  family.validate(plant.size());
  IdealControllerData out;
  out.data.omega = plant.omega;
  out.data.metadata = plant.metadata;
  out.data.metadata["content"] = "ideal_controller";
  out.member = family.partition;
  out.data.values.reserve(plant.size());
  for (std::size_t i = 0; i < plant.size(); ++i) {
    const cplx s(0.0, plant.omega[i]);
    const cplx phi = plant.values[i];
    const cplx m = reference_eval(family.members[family.partition[i]], s);
    if (std::abs(1.0 - m) < kReferenceGuard) {
      throw Error(ErrorCode::reference_saturates, "omega = " + format_double(plant.omega[i]), s);
    }
    if (phi == cplx(0.0)) throw Error(ErrorCode::plant_zero, "omega = " + format_double(plant.omega[i]), s);
    out.data.values.push_back(m / (phi * (1.0 - m)));
  }
  return out;
}

enum class Method { loewner, aaa, vf };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::loewner: return "loewner";
    case Method::aaa: return "aaa";
    case Method::vf: return "vf";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "loewner") return Method::loewner;
  if (name == "aaa") return Method::aaa;
  if (name == "vf") return Method::vf;
  throw Error(ErrorCode::unknown_method, "'" + std::string(name) + "' (expected loewner | aaa | vf)");
}

struct MethodOptions {
  /// Loewner: projection order (detected when absent). AAA/VF: order cap /
  /// fixed order; when absent the Loewner-detected order is used.
  std::optional<std::size_t> order;
  double rank_tol = kDefaultRankTolerance;
  /// AAA stopping tolerance relative to max |K*|.
  double aaa_tol = 1e-10;
  VfOptions vf;
};

using ControllerModel = std::variant<DescriptorRealization, BarycentricModel, PoleResidueModel>;

inline Evaluator controller_evaluator(const ControllerModel& model) {
  return std::visit([](const auto& m) { return make_evaluator(m); }, model);
}

inline std::string form_name(const ControllerModel& model) {
  switch (model.index()) {
    case 0: return "descriptor";
    case 1: return "barycentric";
    default: return "pole_residue";
  }
}

inline std::size_t model_order(const ControllerModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DescriptorRealization>) {
          return static_cast<std::size_t>(m.order());
        } else {
          return m.order();
        }
      },
      model);
}

inline PoleSet controller_poles(const ControllerModel& model) {
  if (const auto* d = std::get_if<DescriptorRealization>(&model)) return poles_of(*d);
  if (const auto* b = std::get_if<BarycentricModel>(&model)) {
    if (b->order() == 0) return {};
    return poles_of(barycentric_to_realization(*b));
  }
  PoleSet p;
  p.finite = std::get<PoleResidueModel>(model).poles;
  return p;
}

inline RationalPolyForm controller_poly_form(const ControllerModel& model) {
  return std::visit([](const auto& m) { return to_poly_form(m); }, model);
}

struct ControllerDesign {
  Method method = Method::loewner;
  ControllerModel model;
  std::size_t order = 0;
  double residual_max = 0.0;  // max_i |K - K*_i| / |K*_i|
  double residual_rms = 0.0;  // rms of the same ratios
  double ls_residual = 0.0;   // sqrt(sum_i |K - K*_i|^2)
  std::optional<OrderReport> loewner_report;
  std::vector<AaaIteration> aaa_history;
  std::optional<AaaExit> aaa_exit;
  std::vector<VfIterationLog> vf_history;
  std::optional<bool> vf_converged;
  std::vector<std::string> warnings;
};

inline void fill_residuals(ControllerDesign& d, const FrequencyDataset& data) {
  const auto k = controller_evaluator(d.model);
  double max_rel = 0.0;
  double sum_rel = 0.0;
  double sum_abs = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const cplx diff = k(cplx(0.0, data.omega[i])) - data.values[i];
    const double rel = std::abs(diff) / std::abs(data.values[i]);
    max_rel = std::max(max_rel, rel);
    sum_rel += rel * rel;
    sum_abs += std::norm(diff);
  }
  d.residual_max = max_rel;
  d.residual_rms = std::sqrt(sum_rel / static_cast<double>(data.size()));
  d.ls_residual = std::sqrt(sum_abs);
}

/// Fits a rational controller to the K* samples with the chosen engine.
inline ControllerDesign design_controller(const IdealControllerData& kdata, Method method,
                                          const MethodOptions& opts = {}) {
  if (kdata.data.empty()) throw Error(ErrorCode::invalid_argument, "design_controller: no ideal-controller samples");
  ControllerDesign d;
  d.method = method;
  try {
    auto order_or_detected = [&]() -> std::size_t {
      if (opts.order) return *opts.order;
      auto [l, r] = partition_data(kdata.data);
      return detect_order(build_pencil(std::move(l), std::move(r)), opts.rank_tol).order;
    };
    switch (method) {
      case Method::loewner: {
        auto fit = loewner_fit(kdata.data, opts.order, opts.rank_tol);
        d.model = std::move(fit.model);
        d.loewner_report = std::move(fit.report);
        d.warnings = std::move(fit.warnings);
        break;
      }
      case Method::aaa: {
        const auto samples = close_under_conjugation(kdata.data);
        double scale = 0.0;
        for (cplx f : samples.f) scale = std::max(scale, std::abs(f));
        const std::size_t n = order_or_detected();
        require(n >= 1, "AAA order must be at least 1");
        auto fit = aaa_fit(samples, opts.aaa_tol * std::max(scale, 1e-300), n);
        d.aaa_history = fit.history;
        d.aaa_exit = fit.exit;
        if (fit.order() == 0) {
          PoleResidueModel c;
          c.direct = fit.constant.real();
          d.model = c;
          d.warnings.push_back("AAA exited at order 0; controller is the constant mean");
        } else {
          d.model = std::move(fit.model);
        }
        break;
      }
      case Method::vf: {
        const std::size_t n = order_or_detected();
        require(n >= 1, "VF order must be at least 1");
        auto fit = vf_fit(kdata.data, n, opts.vf);
        d.model = std::move(fit.model);
        d.vf_history = std::move(fit.history);
        d.vf_converged = fit.converged;
        if (!fit.converged) d.warnings.push_back("VF pole iteration did not converge");
        break;
      }
    }
  } catch (const Error& e) {
    throw e.with_context("[" + to_string(method) + "] ");
  }
  d.order = model_order(d.model);
  fill_residuals(d, kdata.data);
  return d;
}

/// T = H K / (1 + H K).
inline Evaluator closed_loop(Evaluator plant, Evaluator controller) {
  return [h = std::move(plant), k = std::move(controller)](cplx s) {
    const cplx l = h(s) * k(s);
    const cplx den = 1.0 + l;
    if (std::abs(den) <= 1e-14 * std::max(1.0, std::abs(l))) {
      throw Error(ErrorCode::loop_singular, "1 + H K vanishes", s);
    }
    return l / den;
  };
}

/// Controller defined only on the sampled frequencies (and their conjugates).
inline Evaluator tabulated_evaluator(FrequencyDataset data) {
  return [d = std::move(data)](cplx s) {
    if (s.real() == 0.0) {
      const double w = std::abs(s.imag());
      const auto it = std::lower_bound(d.omega.begin(), d.omega.end(), w);
      if (it != d.omega.end() && *it == w) {
        const cplx v = d.values[static_cast<std::size_t>(it - d.omega.begin())];
        return s.imag() > 0 ? v : std::conj(v);
      }
    }
    throw Error(ErrorCode::invalid_argument, "tabulated controller queried off its grid", s);
  };
}

enum class PoleClass { stable, marginal, unstable };

inline std::string to_string(PoleClass c) {
  switch (c) {
    case PoleClass::stable: return "stable";
    case PoleClass::marginal: return "marginal";
    case PoleClass::unstable: return "unstable";
  }
  return "?";
}

inline PoleClass classify_pole(cplx p) {
  const double eps = 1e-8 * std::max(1.0, std::abs(p));
  if (p.real() < -eps) return PoleClass::stable;
  if (p.real() > eps) return PoleClass::unstable;
  return PoleClass::marginal;
}

struct ClosedLoopPoint {
  double omega;
  double cl_gain_db, cl_phase_deg;
  double ref_gain_min_db, ref_gain_max_db;
  double ref_phase_min_deg, ref_phase_max_deg;
  double ol_gain_db, ol_phase_deg;
  double gain_error_db;   // distance outside the reference gain envelope
  double phase_error_deg; // distance outside the reference phase envelope
  double value_error;     // |T - M_j| for the member paired with the sample (or member 0)
};

struct DesignReport {
  ControllerDesign design;
  std::vector<std::pair<cplx, PoleClass>> controller_poles;
  std::size_t infinite_poles = 0;
  int nyquist_winding = 0;  // sampled heuristic, not a stability proof
  std::vector<BodePoint> controller_bode;
  std::vector<ClosedLoopPoint> closed_loop;
  std::vector<double> step_time;
  std::vector<double> step_closed_loop;
  std::vector<std::vector<double>> step_reference;  // one series per member
  double max_gain_error_db = 0.0;
  double max_phase_error_deg = 0.0;
  double max_value_error = 0.0;
};

struct ReportOptions {
  std::vector<double> step_time;  // empty: no step series
  std::optional<StepGrid> step_grid;
};

/// Winding number of 1 + L(i w) around the origin along the sampled contour
/// -w_max..-w_min, w_min..w_max (closed through L -> 0 at infinity).
inline int sampled_nyquist_winding(const Evaluator& loop_gain, std::span<const double> omegas) {
  std::vector<cplx> path;
  for (auto it = omegas.rbegin(); it != omegas.rend(); ++it) path.push_back(1.0 + loop_gain(cplx(0.0, -*it)));
  for (double w : omegas) path.push_back(1.0 + loop_gain(cplx(0.0, w)));
  path.push_back(path.front());
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) total += std::arg(path[k] / path[k - 1]);
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Closed-loop and open-loop Bode data against the reference envelope.
inline std::vector<ClosedLoopPoint> closed_loop_points(const Evaluator& plant, const Evaluator& controller,
                                                       const ReferenceFamily& family, std::span<const double> omegas) {
  require(!family.members.empty(), "closed-loop comparison: empty reference family");
  const auto cl = bode_grid(closed_loop(plant, controller), omegas);
  const auto ol = bode_grid(plant, omegas);
  std::vector<std::vector<BodePoint>> refs;
  for (const auto& m : family.members) {
    refs.push_back(bode_grid([&m](cplx s) { return reference_eval(m, s); }, omegas));
  }
  const bool paired = family.partition.size() == omegas.size();
  auto outside = [](double v, double lo, double hi) {
    if (std::isnan(v)) return std::numeric_limits<double>::infinity();
    return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
  };
  std::vector<ClosedLoopPoint> out;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    ClosedLoopPoint p{};
    p.omega = omegas[i];
    p.cl_gain_db = cl[i].gain_db;
    p.cl_phase_deg = cl[i].phase_deg;
    p.ol_gain_db = ol[i].gain_db;
    p.ol_phase_deg = ol[i].phase_deg;
    p.ref_gain_min_db = p.ref_phase_min_deg = std::numeric_limits<double>::infinity();
    p.ref_gain_max_db = p.ref_phase_max_deg = -std::numeric_limits<double>::infinity();
    for (const auto& r : refs) {
      p.ref_gain_min_db = std::min(p.ref_gain_min_db, r[i].gain_db);
      p.ref_gain_max_db = std::max(p.ref_gain_max_db, r[i].gain_db);
      p.ref_phase_min_deg = std::min(p.ref_phase_min_deg, r[i].phase_deg);
      p.ref_phase_max_deg = std::max(p.ref_phase_max_deg, r[i].phase_deg);
    }
    p.gain_error_db = outside(p.cl_gain_db, p.ref_gain_min_db, p.ref_gain_max_db);
    p.phase_error_deg = outside(p.cl_phase_deg, p.ref_phase_min_deg, p.ref_phase_max_deg);
    p.value_error = std::abs(cl[i].value - refs[paired ? family.partition[i] : 0][i].value);
    out.push_back(p);
  }
  return out;
}

inline DesignReport evaluate_design(const PlantSpec& plant, ControllerDesign design, const ReferenceFamily& family,
                                    std::span<const double> omegas, const ReportOptions& opts = {}) {
  require(!omegas.empty(), "evaluate_design: empty frequency grid");
  DesignReport rep;
  const Evaluator h = plant_evaluator(plant);
  const Evaluator k = controller_evaluator(design.model);
  const Evaluator t = closed_loop(h, k);

  const auto poles = controller_poles(design.model);
  for (cplx p : poles.finite) rep.controller_poles.emplace_back(p, classify_pole(p));
  rep.infinite_poles = poles.infinite;
  rep.nyquist_winding = sampled_nyquist_winding([&](cplx s) { return h(s) * k(s); }, omegas);

  rep.controller_bode = bode_grid(k, omegas);
  rep.closed_loop = closed_loop_points(h, k, family, omegas);
  for (const auto& p : rep.closed_loop) {
    rep.max_gain_error_db = std::max(rep.max_gain_error_db, p.gain_error_db);
    rep.max_phase_error_deg = std::max(rep.max_phase_error_deg, p.phase_error_deg);
    rep.max_value_error = std::max(rep.max_value_error, p.value_error);
  }

  if (!opts.step_time.empty()) {
    const StepGrid grid = opts.step_grid.value_or(StepGrid::for_data(omegas.back()));
    rep.step_time = opts.step_time;
    rep.step_closed_loop = step_response(t, opts.step_time, grid);
    for (const auto& m : family.members) {
      rep.step_reference.push_back(
          step_response([&m](cplx s) { return reference_eval(m, s); }, opts.step_time, grid));
    }
  }
  rep.design = std::move(design);
  return rep;
}

}  // namespace ddc
