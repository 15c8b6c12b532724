#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace ddc {

enum class ErrorCode {
  invalid_argument,
  evaluation_at_pole,
  degenerate_pencil,
  cannot_realify,
  coefficient_form_refused,
  branch_point,
  unknown_plant,
  unknown_reference,
  unknown_method,
  too_many_members,
  parse_error,
  point_collision,
  data_exhausted,
  reference_saturates,
  plant_zero,
  loop_singular,
  solver_failure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::evaluation_at_pole: return "evaluation at pole";
    case ErrorCode::degenerate_pencil: return "degenerate pencil";
    case ErrorCode::cannot_realify: return "cannot realify";
    case ErrorCode::coefficient_form_refused: return "coefficient form refused";
    case ErrorCode::branch_point: return "branch-point evaluation";
    case ErrorCode::unknown_plant: return "unknown plant";
    case ErrorCode::unknown_reference: return "unknown reference kind";
    case ErrorCode::unknown_method: return "unknown method";
    case ErrorCode::too_many_members: return "too many members";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::point_collision: return "point collision";
    case ErrorCode::data_exhausted: return "data exhausted";
    case ErrorCode::reference_saturates: return "reference saturates at sample";
    case ErrorCode::plant_zero: return "plant zero at sample";
    case ErrorCode::loop_singular: return "loop singular";
    case ErrorCode::solver_failure: return "solver failure";
  }
  return "error";
}

/// Library error. Carries a category code plus, where relevant, the complex
/// point or the input line that triggered it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  Error(ErrorCode code, const std::string& detail, std::complex<double> where)
      : Error(code, detail) {
    point_ = where;
  }

  static Error at_line(const std::string& detail, std::size_t line) {
    Error e(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + detail);
    e.line_ = line;
    return e;
  }

  /// Same error with `prefix` prepended to the detail text.
  Error with_context(const std::string& prefix) const {
    Error e(code_, prefix + detail_);
    e.point_ = point_;
    e.line_ = line_;
    return e;
  }

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::complex<double>> point() const noexcept { return point_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<std::complex<double>> point_;
  std::optional<std::size_t> line_;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace ddc
