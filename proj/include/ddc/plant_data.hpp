#pragma once

// Frequency-response datasets: benchmark plants, sampling grids, noise,
// sub-grid partitions, reference models and CSV persistence.

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/lti.hpp"

namespace ddc {

/// SISO samples (w_i, Phi_i) with w strictly increasing and positive.
struct FrequencyDataset {
  std::vector<double> omega;
  std::vector<cplx> values;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return omega.size(); }
  bool empty() const { return omega.empty(); }

  void validate() const {
    require(omega.size() == values.size(), "dataset: omega/value length mismatch");
    for (std::size_t i = 0; i < omega.size(); ++i) {
      require(omega[i] > 0.0, "dataset: frequencies must be positive");
      require(i == 0 || omega[i] > omega[i - 1], "dataset: frequencies must be strictly increasing");
    }
  }
};

// ---------------------------------------------------------------------------
// Plants

/// (E, A, B, C, D) = (1, -1, 0.5, 1, 0), i.e. 0.5 / (s + 1).
struct AcademicPlant {
  DescriptorRealization model() const {
    DescriptorRealization m;
    m.E = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
    m.B = Eigen::MatrixXd::Constant(1, 1, 0.5);
    m.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.D = Eigen::MatrixXd::Zero(1, 1);
    return m;
  }
};

/// Boundary-controlled transport equation observed at x_m:
///   H(s) = sqrt(pi/s) e^{-x_m^2 s} w0^2 / (s^2 + m w0 s + w0^2).
struct TransportPlant {
  /// x sampled on 50 points over [0, 3]; sensor at the 33rd (1-based).
  static constexpr double kDefaultSensor = 32.0 * 3.0 / 49.0;

  double x_m = kDefaultSensor;
  double omega0 = 3.0;
  double damping = 0.5;
  double length = 3.0;

  void validate() const {
    require(x_m > 0.0 && x_m <= length, "transport: sensor must lie in (0, L]");
    require(omega0 > 0.0, "transport: omega0 must be positive");
    require(damping > 0.0, "transport: damping must be positive");
  }
};

inline cplx transport_response(const TransportPlant& plant, cplx s) {
  if (s == cplx(0.0)) throw Error(ErrorCode::branch_point, "sqrt(s) at s = 0", s);
  const double w2 = plant.omega0 * plant.omega0;
  const cplx actuator = w2 / (s * s + plant.damping * plant.omega0 * s + w2);
  return std::sqrt(std::numbers::pi / s) * std::exp(-plant.x_m * plant.x_m * s) * actuator;
}

using PlantSpec = std::variant<AcademicPlant, TransportPlant>;

inline PlantSpec make_plant(std::string_view id) {
  if (id == "academic") return AcademicPlant{};
  if (id == "transport") return TransportPlant{};
  throw Error(ErrorCode::unknown_plant, "'" + std::string(id) + "' (expected academic | transport)");
}

inline std::string plant_id(const PlantSpec& plant) {
  return std::holds_alternative<AcademicPlant>(plant) ? "academic" : "transport";
}

inline cplx plant_response(const PlantSpec& plant, cplx s) {
  if (const auto* t = std::get_if<TransportPlant>(&plant)) return transport_response(*t, s);
  return eval_descriptor(std::get<AcademicPlant>(plant).model(), s);
}

inline Evaluator plant_evaluator(const PlantSpec& plant) {
  return [plant](cplx s) { return plant_response(plant, s); };
}

struct GridSpec {
  double omega_min = 1e-2;
  double omega_max = 1e2;
  std::size_t n = 60;
  bool log_spacing = true;

  void validate() const {
    require(n >= 2, "grid: need at least two points");
    require(omega_min > 0.0 && omega_min < omega_max, "grid: need 0 < omega_min < omega_max");
  }
};

/// Grid inclusive of both endpoints.
inline std::vector<double> make_grid(const GridSpec& grid) {
  grid.validate();
  std::vector<double> w(grid.n);
  const double last = static_cast<double>(grid.n - 1);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double f = static_cast<double>(i) / last;
    if (grid.log_spacing) {
      w[i] = std::pow(10.0, std::log10(grid.omega_min) +
                                f * (std::log10(grid.omega_max) - std::log10(grid.omega_min)));
    } else {
      w[i] = grid.omega_min + f * (grid.omega_max - grid.omega_min);
    }
  }
  w.front() = grid.omega_min;
  w.back() = grid.omega_max;
  return w;
}

inline FrequencyDataset sample_plant(const PlantSpec& plant, const GridSpec& grid) {
  if (const auto* t = std::get_if<TransportPlant>(&plant)) t->validate();
  FrequencyDataset data;
  data.omega = make_grid(grid);
  data.values.reserve(data.omega.size());
  for (double w : data.omega) data.values.push_back(plant_response(plant, cplx(0.0, w)));
  data.metadata["source"] = plant_id(plant);
  return data;
}

// ---------------------------------------------------------------------------
// Noise

/// SplitMix64 in counter form: draw k (0-based) of stream `seed` is
/// mix(seed + (k + 1) * 0x9E3779B97F4A7C15), so any draw is addressable
/// and the sequence is identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// The factors (1 + n_i) applied by add_noise.
inline std::vector<double> noise_multipliers(std::size_t count, double amplitude, std::uint64_t seed) {
  require(amplitude >= 0.0, "noise amplitude must be nonnegative");
  SplitMix64 rng(seed);
  std::vector<double> out(count);
  for (auto& m : out) m = 1.0 + amplitude * rng.uniform();
  return out;
}

/// Phi_i -> Phi_i (1 + n_i), n_i ~ U[0, amplitude] i.i.d.
inline FrequencyDataset add_noise(FrequencyDataset data, double amplitude, std::uint64_t seed) {
  const auto mult = noise_multipliers(data.size(), amplitude, seed);
  for (std::size_t i = 0; i < data.size(); ++i) data.values[i] *= mult[i];
  data.metadata["noise_amplitude"] = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", amplitude);
    return std::string(buf);
  }();
  data.metadata["noise_seed"] = std::to_string(seed);
  return data;
}

// ---------------------------------------------------------------------------
// Sub-grids

struct SubgridSplit {
  std::vector<FrequencyDataset> parts;
  /// member_of[i] is the sub-grid holding sample i.
  std::vector<std::size_t> member_of;
};

/// Round-robin: sample i goes to sub-grid i mod n_s.
inline SubgridSplit split_subgrids(const FrequencyDataset& data, std::size_t n_s) {
  require(n_s >= 1, "split_subgrids: need at least one member");
  if (n_s > data.size()) {
    throw Error(ErrorCode::too_many_members, std::to_string(n_s) + " members for " +
                                                 std::to_string(data.size()) + " samples");
  }
  SubgridSplit out;
  out.parts.resize(n_s);
  out.member_of.resize(data.size());
  for (auto& p : out.parts) p.metadata = data.metadata;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t j = i % n_s;
    out.member_of[i] = j;
    out.parts[j].omega.push_back(data.omega[i]);
    out.parts[j].values.push_back(data.values[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference models

/// 1 / (s^2/p^2 + 2 s/p + 1).
struct SecondOrderReference {
  double p = 1.0;
};

/// e^{-delay s} w_n^2 / (s^2 + 2 zeta w_n s + w_n^2) / (s/p + 1).
struct DelayedOscillatoryReference {
  double delay = TransportPlant::kDefaultSensor * TransportPlant::kDefaultSensor;
  double omega_n = 0.2;
  double damping = 0.5;
  double p = 0.1;
};

using ReferenceSpec = std::variant<SecondOrderReference, DelayedOscillatoryReference, RationalPolyForm>;

inline cplx reference_eval(const ReferenceSpec& spec, cplx s) {
  return std::visit(
      [s](const auto& r) -> cplx {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SecondOrderReference>) {
          return 1.0 / (s * s / (r.p * r.p) + 2.0 * s / r.p + 1.0);
        } else if constexpr (std::is_same_v<T, DelayedOscillatoryReference>) {
          const double wn2 = r.omega_n * r.omega_n;
          return std::exp(-r.delay * s) * wn2 / (s * s + 2.0 * r.damping * r.omega_n * s + wn2) /
                 (s / r.p + 1.0);
        } else {
          return eval_poly_form(r, s);
        }
      },
      spec);
}

/// Builds one member per parameter value for a named reference kind.
inline std::vector<ReferenceSpec> make_reference_members(std::string_view kind,
                                                         const std::vector<double>& p_values,
                                                         const DelayedOscillatoryReference& base = {}) {
  require(!p_values.empty(), "reference family needs at least one parameter value");
  std::vector<ReferenceSpec> out;
  for (double p : p_values) {
    require(p > 0.0, "reference parameter p must be positive");
    if (kind == "second-order") {
      out.emplace_back(SecondOrderReference{p});
    } else if (kind == "delayed-oscillatory") {
      auto r = base;
      r.p = p;
      out.emplace_back(r);
    } else {
      throw Error(ErrorCode::unknown_reference,
                  "'" + std::string(kind) + "' (expected second-order | delayed-oscillatory)");
    }
  }
  return out;
}

/// Members M_j plus the assignment of every sample index to one member.
struct ReferenceFamily {
  std::vector<ReferenceSpec> members;
  std::vector<std::size_t> partition;

  std::size_t size() const { return members.size(); }

  void validate(std::size_t samples) const {
    require(!members.empty(), "reference family is empty");
    require(partition.size() == samples, "reference partition must cover every sample");
    for (auto j : partition) require(j < members.size(), "reference partition index out of range");
  }
};

/// Round-robin family over `samples` points (the split_subgrids rule).
inline ReferenceFamily make_family(std::vector<ReferenceSpec> members, std::size_t samples) {
  require(!members.empty(), "reference family is empty");
  if (members.size() > samples) {
    throw Error(ErrorCode::too_many_members, std::to_string(members.size()) + " members for " +
                                                 std::to_string(samples) + " samples");
  }
  ReferenceFamily f;
  f.partition.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) f.partition[i] = i % members.size();
  f.members = std::move(members);
  return f;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_dataset(std::ostream& os, const FrequencyDataset& data) {
  data.validate();
  for (const auto& [k, v] : data.metadata) os << "# " << k << '=' << v << '\n';
  os << "omega,re,im\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << format_double(data.omega[i]) << ',' << format_double(data.values[i].real()) << ','
       << format_double(data.values[i].imag()) << '\n';
  }
}

inline void save_dataset(const std::string& path, const FrequencyDataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::invalid_argument, "cannot open '" + path + "' for writing");
  write_dataset(os, data);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline FrequencyDataset read_dataset(std::istream& is) {
  FrequencyDataset data;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = detail::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        data.metadata[std::string(detail::trim(body.substr(0, eq)))] =
            std::string(detail::trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!header) {
      if (line != "omega,re,im") throw Error::at_line("expected header 'omega,re,im'", line_no);
      header = true;
      continue;
    }
    double f[3];
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto comma = line.find(',', start);
      const bool last = k == 2;
      if (!last && comma == std::string_view::npos) throw Error::at_line("expected 3 fields", line_no);
      if (last && comma != std::string_view::npos) throw Error::at_line("expected 3 fields", line_no);
      const auto field = line.substr(start, last ? std::string_view::npos : comma - start);
      if (!detail::parse_double(field, f[k])) {
        throw Error::at_line("malformed number '" + std::string(field) + "'", line_no);
      }
      start = comma + 1;
    }
    if (!(f[0] > 0.0)) throw Error::at_line("omega must be positive", line_no);
    if (!data.omega.empty() && !(f[0] > data.omega.back())) {
      throw Error::at_line("omega must be strictly increasing", line_no);
    }
    data.omega.push_back(f[0]);
    data.values.emplace_back(f[1], f[2]);
  }
  if (!header) throw Error::at_line("missing 'omega,re,im' header", line_no);
  if (data.empty()) throw Error::at_line("no samples", line_no);
  return data;
}

inline FrequencyDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::invalid_argument, "cannot open '" + path + "'");
  return read_dataset(is);
}

}  // namespace ddc
