#pragma once

// JSON model/report documents and the plot-ready CSV tables. The schemas
// are described in docs/formats.md.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/lti.hpp"
#include "ddc/pipeline.hpp"
#include "ddc/plant_data.hpp"

namespace ddc {

using json = nlohmann::json;

using AnyModel = std::variant<DescriptorRealization, BarycentricModel, PoleResidueModel, RationalPolyForm>;

namespace detail {

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json complex_list(const std::vector<cplx>& v) {
  json out = json::array();
  for (cplx z : v) out.push_back({z.real(), z.imag()});
  return out;
}

[[noreturn]] inline void schema_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::parse_error, "field '" + field + "': " + what);
}

inline const json& field(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains(name)) schema_error(name, "missing");
  return j.at(name);
}

inline double real_of(const json& j, const std::string& name) {
  if (!j.is_number()) schema_error(name, "expected a number");
  return j.get<double>();
}

inline Eigen::MatrixXd matrix_of(const json& j, const std::string& name) {
  if (!j.is_array()) schema_error(name, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) schema_error(name, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = real_of(row.at(static_cast<std::size_t>(c)), name);
  }
  return m;
}

inline std::vector<cplx> complex_list_of(const json& j, const std::string& name) {
  if (!j.is_array()) schema_error(name, "expected an array of [re, im] pairs");
  std::vector<cplx> out;
  for (const json& z : j) {
    if (!z.is_array() || z.size() != 2) schema_error(name, "expected [re, im]");
    out.emplace_back(real_of(z[0], name), real_of(z[1], name));
  }
  return out;
}

inline std::vector<double> real_list_of(const json& j, const std::string& name) {
  if (!j.is_array()) schema_error(name, "expected an array of numbers");
  std::vector<double> out;
  for (const json& x : j) out.push_back(real_of(x, name));
  return out;
}

}  // namespace detail

inline json to_json(const DescriptorRealization& m) {
  return {{"form", "descriptor"},
          {"E", detail::matrix_json(m.E)},
          {"A", detail::matrix_json(m.A)},
          {"B", detail::matrix_json(m.B)},
          {"C", detail::matrix_json(m.C)},
          {"D", detail::matrix_json(m.D)}};
}

inline json to_json(const BarycentricModel& m) {
  return {{"form", "barycentric"},
          {"support", detail::complex_list(m.support)},
          {"values", detail::complex_list(m.values)},
          {"weights", detail::complex_list(m.weights)}};
}

inline json to_json(const PoleResidueModel& m) {
  return {{"form", "pole_residue"},
          {"poles", detail::complex_list(m.poles)},
          {"residues", detail::complex_list(m.residues)},
          {"direct", m.direct}};
}

inline json to_json(const RationalPolyForm& m) {
  return {{"form", "poly"}, {"num", m.num}, {"den", m.den}};
}

inline json to_json(const AnyModel& m) {
  return std::visit([](const auto& x) { return to_json(x); }, m);
}

inline json to_json(const ControllerModel& m) {
  return std::visit([](const auto& x) { return to_json(x); }, m);
}

inline AnyModel model_from_json(const json& j) {
  const json& form = detail::field(j, "form");
  if (!form.is_string()) detail::schema_error("form", "expected a string");
  const auto name = form.get<std::string>();
  if (name == "descriptor") {
    DescriptorRealization m;
    m.E = detail::matrix_of(detail::field(j, "E"), "E");
    m.A = detail::matrix_of(detail::field(j, "A"), "A");
    m.B = detail::matrix_of(detail::field(j, "B"), "B");
    m.C = detail::matrix_of(detail::field(j, "C"), "C");
    m.D = detail::matrix_of(detail::field(j, "D"), "D");
    try {
      m.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, e.detail());
    }
    return m;
  }
  if (name == "barycentric") {
    BarycentricModel m;
    m.support = detail::complex_list_of(detail::field(j, "support"), "support");
    m.values = detail::complex_list_of(detail::field(j, "values"), "values");
    m.weights = detail::complex_list_of(detail::field(j, "weights"), "weights");
    if (m.values.size() != m.support.size() || m.weights.size() != m.support.size()) {
      detail::schema_error("support", "support, values and weights must have equal length");
    }
    return m;
  }
  if (name == "pole_residue") {
    PoleResidueModel m;
    m.poles = detail::complex_list_of(detail::field(j, "poles"), "poles");
    m.residues = detail::complex_list_of(detail::field(j, "residues"), "residues");
    if (m.residues.size() != m.poles.size()) detail::schema_error("residues", "length must match poles");
    if (j.contains("direct")) m.direct = detail::real_of(j.at("direct"), "direct");
    return m;
  }
  if (name == "poly") {
    RationalPolyForm m;
    m.num = detail::real_list_of(detail::field(j, "num"), "num");
    m.den = detail::real_list_of(detail::field(j, "den"), "den");
    if (m.den.empty()) detail::schema_error("den", "empty denominator");
    return m;
  }
  detail::schema_error("form", "unknown form '" + name + "'");
}

inline Evaluator make_evaluator(const AnyModel& m) {
  return std::visit([](const auto& x) { return make_evaluator(x); }, m);
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::parse_error, "cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  os << text;
}

inline void save_model(const std::string& path, const AnyModel& m) { write_text_file(path, to_json(m).dump(2) + "\n"); }

inline AnyModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Tables

/// A header plus rows of numbers, written with 17 significant digits.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << format_double(r[c]);
      os << '\n';
    }
    return os.str();
  }
};

inline const std::vector<std::string> kBodeClosedLoopHeader = {
    "omega",           "cl_gain_db",        "cl_phase_deg", "ref_gain_min_db", "ref_gain_max_db",
    "ref_phase_min_deg", "ref_phase_max_deg", "ol_gain_db",   "ol_phase_deg",    "gain_error_db",
    "phase_error_deg", "value_error"};
inline const std::vector<std::string> kControllerBodeHeader = {"omega", "gain_db", "phase_deg", "re", "im"};
inline const std::vector<std::string> kSingularValueHeader = {"k", "sigma"};
inline const std::vector<std::string> kAaaHistoryHeader = {"ell", "max_error", "selected_omega"};
inline const std::vector<std::string> kVfHistoryHeader = {"iter", "pole_movement", "ls_residual"};

inline Table bode_closedloop_table(const DesignReport& rep) {
  Table t{kBodeClosedLoopHeader, {}};
  for (const auto& p : rep.closed_loop) {
    t.rows.push_back({p.omega, p.cl_gain_db, p.cl_phase_deg, p.ref_gain_min_db, p.ref_gain_max_db,
                      p.ref_phase_min_deg, p.ref_phase_max_deg, p.ol_gain_db, p.ol_phase_deg, p.gain_error_db,
                      p.phase_error_deg, p.value_error});
  }
  return t;
}

inline Table controller_bode_table(const DesignReport& rep) {
  Table t{kControllerBodeHeader, {}};
  for (const auto& p : rep.controller_bode) t.rows.push_back({p.omega, p.gain_db, p.phase_deg, p.value.real(), p.value.imag()});
  return t;
}

/// t, closed_loop, reference_1 .. reference_ns.
inline Table step_table(const DesignReport& rep) {
  Table t{{"t", "closed_loop"}, {}};
  for (std::size_t j = 0; j < rep.step_reference.size(); ++j) t.header.push_back("reference_" + std::to_string(j + 1));
  for (std::size_t i = 0; i < rep.step_time.size(); ++i) {
    std::vector<double> row{rep.step_time[i], rep.step_closed_loop[i]};
    for (const auto& r : rep.step_reference) row.push_back(r[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table singular_value_table(const OrderReport& report) {
  Table t{kSingularValueHeader, {}};
  for (std::size_t k = 0; k < report.singular_values.size(); ++k) {
    t.rows.push_back({static_cast<double>(k + 1), report.singular_values[k]});
  }
  return t;
}

inline Table aaa_history_table(const std::vector<AaaIteration>& history) {
  Table t{kAaaHistoryHeader, {}};
  for (const auto& h : history) t.rows.push_back({static_cast<double>(h.ell), h.max_error, h.selected_omega});
  return t;
}

inline Table vf_history_table(const std::vector<VfIterationLog>& history) {
  Table t{kVfHistoryHeader, {}};
  for (const auto& h : history) t.rows.push_back({static_cast<double>(h.iter), h.pole_movement, h.ls_residual});
  return t;
}

inline std::string to_string(AaaExit e) {
  switch (e) {
    case AaaExit::tolerance: return "tolerance";
    case AaaExit::order_cap: return "order_cap";
    case AaaExit::data_exhausted: return "data_exhausted";
  }
  return "?";
}

/// Design summary; non-finite numbers become null.
inline json report_to_json(const DesignReport& rep) {
  const auto& d = rep.design;
  json j;
  j["method"] = to_string(d.method);
  j["controller_form"] = form_name(d.model);
  j["order"] = d.order;
  j["residual_max"] = d.residual_max;
  j["residual_rms"] = d.residual_rms;
  j["ls_residual"] = d.ls_residual;
  j["controller"] = to_json(d.model);
  if (d.order <= kMaxPolyOrder) {
    try {
      const auto pf = controller_poly_form(d.model);
      j["controller_poly"] = {{"num", pf.num}, {"den", pf.den}};
    } catch (const Error&) {
    }
  }
  json poles = json::array();
  for (const auto& [p, c] : rep.controller_poles) poles.push_back({{"re", p.real()}, {"im", p.imag()}, {"class", to_string(c)}});
  j["controller_poles"] = poles;
  j["infinite_poles"] = rep.infinite_poles;
  j["nyquist_winding"] = rep.nyquist_winding;
  j["nyquist_note"] = "sampled on the data grid; heuristic, not a stability proof";
  j["max_gain_error_db"] = rep.max_gain_error_db;
  j["max_phase_error_deg"] = rep.max_phase_error_deg;
  j["max_value_error"] = rep.max_value_error;
  if (d.loewner_report) {
    j["loewner"] = {{"detected_order", d.loewner_report->order},
                    {"tolerance", d.loewner_report->tolerance},
                    {"column_rank", d.loewner_report->column_rank},
                    {"singular_values", d.loewner_report->singular_values}};
  }
  if (d.aaa_exit) j["aaa"] = {{"exit", to_string(*d.aaa_exit)}, {"iterations", d.aaa_history.size() - 1}};
  if (d.vf_converged) j["vf"] = {{"converged", *d.vf_converged}, {"iterations", d.vf_history.size()}};
  j["warnings"] = d.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// Validation of emitted files

struct ValidationResult {
  std::string kind;
  std::size_t records = 0;
};

/// Parses a numeric CSV table against an expected header (prefix match for
/// step tables). Errors carry 1-based line numbers.
inline std::size_t validate_table(std::istream& is, const std::vector<std::string>& expected, bool open_ended = false) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw Error(ErrorCode::parse_error, "empty table");
  ++lineno;
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(std::string(detail::trim(cell)));
  }
  const bool ok = open_ended ? header.size() >= expected.size() &&
                                   std::equal(expected.begin(), expected.end(), header.begin())
                             : header == expected;
  if (!ok) throw Error::at_line("unexpected header '" + line + "'", lineno);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (!detail::parse_double(detail::trim(cell), v)) throw Error::at_line("not a number: '" + cell + "'", lineno);
      ++cols;
    }
    if (cols != header.size()) throw Error::at_line("expected " + std::to_string(header.size()) + " fields", lineno);
    ++rows;
  }
  return rows;
}

/// Recognizes an emitted file by content and checks it against its schema.
/// JSON models must also survive a parse/serialize round trip unchanged.
inline ValidationResult validate_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::parse_error, "cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw Error(ErrorCode::parse_error, path + ": empty file");

  if (text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse_error, path + ": " + e.what());
    }
    if (j.contains("method") && j.contains("controller")) {
      for (const char* key : {"order", "residual_max", "residual_rms", "controller_poles"}) {
        detail::field(j, key);
      }
      model_from_json(j.at("controller"));
      return {"report", 1};
    }
    if (j.contains("form")) {
      const AnyModel m = model_from_json(j);
      if (to_json(m) != j) throw Error(ErrorCode::parse_error, path + ": model does not round-trip");
      return {"model:" + j.at("form").get<std::string>(), 1};
    }
    throw Error(ErrorCode::parse_error, path + ": unrecognized JSON document");
  }

  std::istringstream ts(text);
  std::string head;
  std::istringstream peek(text);
  while (std::getline(peek, head) && !head.empty() && head[0] == '#') {
  }
  head = std::string(detail::trim(head));
  if (head == "omega,re,im") {
    const auto data = read_dataset(ts);
    return {"dataset", data.size()};
  }
  struct Known {
    const char* kind;
    const std::vector<std::string>* header;
  };
  const Known known[] = {{"bode_closedloop", &kBodeClosedLoopHeader},
                         {"controller_bode", &kControllerBodeHeader},
                         {"singular_values", &kSingularValueHeader},
                         {"aaa_history", &kAaaHistoryHeader},
                         {"vf_history", &kVfHistoryHeader}};
  for (const auto& k : known) {
    std::string joined;
    for (std::size_t c = 0; c < k.header->size(); ++c) joined += (c ? "," : "") + (*k.header)[c];
    if (head == joined) return {k.kind, validate_table(ts, *k.header)};
  }
  if (head.rfind("t,closed_loop", 0) == 0) return {"step", validate_table(ts, {"t", "closed_loop"}, true)};
  if (head.rfind("method,", 0) == 0) {
    std::string line;
    std::getline(ts, line);
    std::size_t rows = 0;
    while (std::getline(ts, line)) rows += detail::trim(line).empty() ? 0 : 1;
    return {"summary", rows};
  }
  throw Error(ErrorCode::parse_error, path + ": unrecognized file (header '" + head + "')");
}

}  // namespace ddc
