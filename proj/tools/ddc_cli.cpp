// ddc: command-line front end for sampling plants, synthesizing ideal
// controllers, fitting them with one of the three engines and emitting
// plot-ready tables.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ddc/io.hpp"
#include "ddc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ddc;

namespace {

/// Bad flags or config values: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string plant;
  double x_m = TransportPlant::kDefaultSensor;
  double omega0 = 3.0;
  double actuator_damping = 0.5;

  std::size_t n = 60;
  std::string wmin = "1e-2";
  std::string wmax = "1e2";
  bool linear = false;

  double noise = 0.0;
  std::uint64_t seed = 1;

  std::string reference;  // empty: second-order for academic, delayed-oscillatory for transport
  std::size_t ns = 0;     // 0: one member per --p value
  std::vector<double> p;
  double ref_delay = TransportPlant::kDefaultSensor * TransportPlant::kDefaultSensor;
  double ref_omega_n = 0.2;
  double ref_damping = 0.5;

  std::string method = "loewner";
  std::string order = "auto";
  double tol = kDefaultRankTolerance;
  double aaa_tol = 1e-10;
  std::string direct = "off";
  std::string flip_unstable = "off";
  std::size_t max_iters = 100;
  double pole_tol = 1e-8;

  std::string data;   // dataset CSV instead of sampling
  std::string model;  // controller JSON for closedloop / step
  std::string out = ".";
  double t_end = 0.0;
  std::size_t t_points = 0;
};

/// Accepts plain decimals and "a^b" (e.g. 10^1.5).
double parse_number(const std::string& text, const std::string& flag) {
  auto whole = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError(flag + ": not a number: '" + text + "'");
    return v;
  };
  const auto caret = text.find('^');
  if (caret == std::string::npos) return whole(text);
  return std::pow(whole(text.substr(0, caret)), whole(text.substr(caret + 1)));
}

bool parse_switch(const std::string& v, const std::string& flag) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw UsageError(flag + ": expected on|off, got '" + v + "'");
}

PlantSpec plant_of(const ExperimentConfig& cfg) {
  if (cfg.plant.empty()) throw UsageError("--plant is required (academic | transport)");
  PlantSpec plant;
  try {
    plant = make_plant(cfg.plant);
  } catch (const Error& e) {
    throw UsageError(std::string("--plant: ") + e.what());
  }
  if (auto* t = std::get_if<TransportPlant>(&plant)) {
    t->x_m = cfg.x_m;
    t->omega0 = cfg.omega0;
    t->damping = cfg.actuator_damping;
    try {
      t->validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return plant;
}

GridSpec grid_of(const ExperimentConfig& cfg) {
  GridSpec g;
  g.omega_min = parse_number(cfg.wmin, "--wmin");
  g.omega_max = parse_number(cfg.wmax, "--wmax");
  g.n = cfg.n;
  g.log_spacing = !cfg.linear;
  if (g.n < 2) throw UsageError("--n: need at least 2 samples");
  if (!(g.omega_min > 0.0 && g.omega_min < g.omega_max)) throw UsageError("--wmin/--wmax: need 0 < wmin < wmax");
  return g;
}

FrequencyDataset dataset_of(const ExperimentConfig& cfg) {
  if (cfg.noise < 0.0) throw UsageError("--noise: amplitude must be nonnegative");
  FrequencyDataset data = cfg.data.empty() ? sample_plant(plant_of(cfg), grid_of(cfg)) : load_dataset(cfg.data);
  if (cfg.noise > 0.0) data = add_noise(std::move(data), cfg.noise, cfg.seed);
  return data;
}

ReferenceFamily family_of(const ExperimentConfig& cfg, std::size_t samples) {
  std::string kind = cfg.reference;
  if (kind.empty()) kind = cfg.plant == "transport" ? "delayed-oscillatory" : "second-order";
  std::vector<double> p = cfg.p;
  if (p.empty()) p = {kind == "delayed-oscillatory" ? 0.1 : 1.0};
  if (cfg.ns != 0 && cfg.ns != p.size()) {
    if (p.size() != 2 || cfg.ns < 2) {
      throw UsageError("--ns/--p: give ns values of p, or two endpoints to space linearly");
    }
    const double a = p[0];
    const double b = p[1];
    p.clear();
    for (std::size_t j = 0; j < cfg.ns; ++j) p.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(cfg.ns - 1));
  }
  DelayedOscillatoryReference base;
  base.delay = cfg.ref_delay;
  base.omega_n = cfg.ref_omega_n;
  base.damping = cfg.ref_damping;
  try {
    return make_family(make_reference_members(kind, p, base), samples);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::too_many_members) throw;
    throw UsageError(std::string("reference: ") + e.what());
  }
}

Method method_of(const ExperimentConfig& cfg) {
  try {
    return parse_method(cfg.method);
  } catch (const Error& e) {
    throw UsageError(std::string("--method: ") + e.what());
  }
}

MethodOptions options_of(const ExperimentConfig& cfg) {
  MethodOptions o;
  if (cfg.order != "auto") {
    const double v = parse_number(cfg.order, "--order");
    if (v < 1 || v != std::floor(v)) throw UsageError("--order: expected a positive integer or 'auto'");
    o.order = static_cast<std::size_t>(v);
  }
  if (!(cfg.tol > 0.0)) throw UsageError("--tol: must be positive");
  o.rank_tol = cfg.tol;
  o.aaa_tol = cfg.aaa_tol;
  o.vf.direct = parse_switch(cfg.direct, "--direct");
  o.vf.flip_unstable = parse_switch(cfg.flip_unstable, "--flip-unstable");
  o.vf.max_iters = cfg.max_iters;
  o.vf.pole_tol = cfg.pole_tol;
  if (o.vf.max_iters < 1) throw UsageError("--max-iters: must be at least 1");
  return o;
}

std::vector<double> time_grid(const ExperimentConfig& cfg) {
  const bool transport = cfg.plant == "transport";
  const double t_end = cfg.t_end > 0.0 ? cfg.t_end : (transport ? 150.0 : 20.0);
  const std::size_t pts = cfg.t_points > 1 ? cfg.t_points : (transport ? 301 : 201);
  std::vector<double> t(pts);
  for (std::size_t k = 0; k < pts; ++k) t[k] = t_end * static_cast<double>(k) / static_cast<double>(pts - 1);
  return t;
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::invalid_argument, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_dataset_file(const fs::path& path, const FrequencyDataset& data) { save_dataset(path.string(), data); }

void write_design(const fs::path& dir, const DesignReport& rep) {
  prepare_dir(dir);
  write_text_file((dir / "controller.json").string(), to_json(rep.design.model).dump(2) + "\n");
  write_text_file((dir / "report.json").string(), report_to_json(rep).dump(2) + "\n");
  write_text_file((dir / "bode_closedloop.csv").string(), bode_closedloop_table(rep).csv());
  write_text_file((dir / "controller_bode.csv").string(), controller_bode_table(rep).csv());
  if (!rep.step_time.empty()) write_text_file((dir / "step.csv").string(), step_table(rep).csv());
  if (rep.design.loewner_report) {
    write_text_file((dir / "singular_values.csv").string(), singular_value_table(*rep.design.loewner_report).csv());
  }
  if (!rep.design.aaa_history.empty()) {
    write_text_file((dir / "aaa_history.csv").string(), aaa_history_table(rep.design.aaa_history).csv());
  }
  if (!rep.design.vf_history.empty()) {
    write_text_file((dir / "vf_history.csv").string(), vf_history_table(rep.design.vf_history).csv());
  }
}

std::size_t unstable_count(const DesignReport& rep) {
  std::size_t n = 0;
  for (const auto& [p, c] : rep.controller_poles) n += c == PoleClass::unstable;
  return n;
}

void print_design_line(const DesignReport& rep) {
  const auto& d = rep.design;
  std::printf("%-8s order %3zu  residual max %.3e rms %.3e  ls %.3e  gain err %.3g dB  unstable poles %zu\n",
              to_string(d.method).c_str(), d.order, d.residual_max, d.residual_rms, d.ls_residual,
              rep.max_gain_error_db, unstable_count(rep));
  if (d.order <= kMaxPolyOrder && d.order <= 4) {
    try {
      const auto pf = controller_poly_form(d.model);
      std::printf("         num");
      for (double c : pf.num) std::printf(" %.6g", c);
      std::printf("  den");
      for (double c : pf.den) std::printf(" %.6g", c);
      std::printf("\n");
    } catch (const Error&) {
    }
  }
  for (const auto& w : d.warnings) std::printf("         warning: %s\n", w.c_str());
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_sample(const ExperimentConfig& cfg) {
  const auto data = dataset_of(cfg);
  const fs::path path = prepare_dir(cfg.out) / "plant.csv";
  write_dataset_file(path, data);
  std::printf("wrote %zu samples on [%g, %g] rad/s to %s\n", data.size(), data.omega.front(), data.omega.back(),
              path.string().c_str());
  return 0;
}

int cmd_ideal(const ExperimentConfig& cfg) {
  const auto data = dataset_of(cfg);
  const auto fam = family_of(cfg, data.size());
  const auto k = ideal_controller_samples(data, fam);
  const fs::path path = prepare_dir(cfg.out) / "ideal.csv";
  write_dataset_file(path, k.data);
  std::printf("wrote %zu ideal-controller samples (%zu reference members) to %s\n", k.data.size(), fam.size(),
              path.string().c_str());
  return 0;
}

DesignReport run_design(const ExperimentConfig& cfg, const FrequencyDataset& data, const ReferenceFamily& fam,
                        Method method, const MethodOptions& opts) {
  const auto k = ideal_controller_samples(data, fam);
  auto design = design_controller(k, method, opts);
  ReportOptions ro;
  ro.step_time = time_grid(cfg);
  return evaluate_design(plant_of(cfg), std::move(design), fam, data.omega, ro);
}

int cmd_design(const ExperimentConfig& cfg) {
  const Method method = method_of(cfg);
  const auto opts = options_of(cfg);
  const auto data = dataset_of(cfg);
  const auto fam = family_of(cfg, data.size());
  const auto rep = run_design(cfg, data, fam, method, opts);
  write_design(cfg.out, rep);
  print_design_line(rep);
  return 0;
}

int cmd_closedloop(const ExperimentConfig& cfg) {
  if (cfg.model.empty()) throw UsageError("closedloop: --model is required");
  const auto model = load_model(cfg.model);
  const auto data = dataset_of(cfg);
  const auto fam = family_of(cfg, data.size());
  const auto pts = closed_loop_points(plant_evaluator(plant_of(cfg)), make_evaluator(model), fam, data.omega);
  DesignReport rep;
  rep.closed_loop = pts;
  const fs::path path = prepare_dir(cfg.out) / "bode_closedloop.csv";
  write_text_file(path.string(), bode_closedloop_table(rep).csv());
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, p.gain_error_db);
  std::printf("wrote %zu closed-loop points to %s (max gain outside envelope %.3g dB)\n", pts.size(),
              path.string().c_str(), worst);
  return 0;
}

int cmd_step(const ExperimentConfig& cfg) {
  if (cfg.model.empty()) throw UsageError("step: --model is required");
  const auto model = load_model(cfg.model);
  const auto plant = plant_of(cfg);
  const GridSpec grid = grid_of(cfg);
  const auto fam = family_of(cfg, std::max<std::size_t>(cfg.ns, 1));
  DesignReport rep;
  rep.step_time = time_grid(cfg);
  const StepGrid sg = StepGrid::for_data(grid.omega_max);
  rep.step_closed_loop = step_response(closed_loop(plant_evaluator(plant), make_evaluator(model)), rep.step_time, sg);
  for (const auto& m : fam.members) {
    rep.step_reference.push_back(step_response([&m](cplx s) { return reference_eval(m, s); }, rep.step_time, sg));
  }
  const fs::path path = prepare_dir(cfg.out) / "step.csv";
  write_text_file(path.string(), step_table(rep).csv());
  std::printf("wrote %zu step samples to %s (final value %.6g)\n", rep.step_time.size(), path.string().c_str(),
              rep.step_closed_loop.back());
  return 0;
}

int cmd_repro(ExperimentConfig cfg, const std::string& name, bool noise_given) {
  struct Case {
    const char* name;
    bool transport;
    bool uncertain;
  };
  const Case cases[] = {{"standard-academic", false, false},
                        {"uncertain-academic", false, true},
                        {"standard-transport", true, false},
                        {"uncertain-transport", true, true}};
  const Case* c = nullptr;
  for (const auto& k : cases) {
    if (name == k.name) c = &k;
  }
  if (!c) {
    throw UsageError("repro: unknown case '" + name +
                     "' (standard-academic | uncertain-academic | standard-transport | uncertain-transport)");
  }
  const auto seed = cfg.seed;
  const auto noise = cfg.noise;
  const fs::path root = cfg.out;
  cfg = ExperimentConfig{};
  cfg.out = root.string();
  cfg.seed = seed;
  if (c->transport) {
    cfg.plant = "transport";
    cfg.n = 100;
    cfg.wmin = "1e-2";
    cfg.wmax = "10^1.5";
    cfg.tol = 1e-8;
    cfg.p = c->uncertain ? std::vector<double>{0.05, 0.2} : std::vector<double>{0.1};
    cfg.ns = c->uncertain ? 5 : 1;
    cfg.noise = c->uncertain ? 0.5 : 0.0;
  } else {
    cfg.plant = "academic";
    cfg.p = c->uncertain ? std::vector<double>{1.0, 1.1, 1.2, 1.3, 1.4, 1.5} : std::vector<double>{1.0};
  }
  if (noise_given) cfg.noise = noise;

  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = prepare_dir(root / c->name);
  const auto data = dataset_of(cfg);
  const auto fam = family_of(cfg, data.size());
  write_dataset_file(dir / "plant.csv", data);
  const auto k = ideal_controller_samples(data, fam);
  write_dataset_file(dir / "ideal.csv", k.data);

  MethodOptions opts;
  opts.rank_tol = cfg.tol;
  if (c->uncertain && !c->transport) opts.order = 2;
  if (c->transport) {
    // Order from the noise-free nominal (single-member) ideal controller.
    ExperimentConfig nominal = cfg;
    nominal.noise = 0.0;
    nominal.ns = 1;
    nominal.p = {0.1};
    const auto clean = dataset_of(nominal);
    const auto kn = ideal_controller_samples(clean, family_of(nominal, clean.size()));
    auto [l, r] = partition_data(kn.data);
    const auto report = detect_order(build_pencil(std::move(l), std::move(r)), cfg.tol);
    write_text_file((dir / "singular_values.csv").string(), singular_value_table(report).csv());
    opts.order = report.order;
    std::printf("%s: detected order %zu at tolerance %g\n", c->name, report.order, cfg.tol);
  }

  std::string summary_text = "method,order,residual_max,residual_rms,ls_residual,max_gain_error_db,max_value_error,unstable_poles\n";
  int status = 0;
  for (Method m : {Method::loewner, Method::aaa, Method::vf}) {
    MethodOptions o = opts;
    o.vf.direct = m == Method::vf && c->uncertain && !c->transport;
    try {
      const auto rep = run_design(cfg, data, fam, m, o);
      write_design(dir / to_string(m), rep);
      print_design_line(rep);
      const auto& d = rep.design;
      summary_text += to_string(m) + "," + std::to_string(d.order) + "," + format_double(d.residual_max) + "," +
                      format_double(d.residual_rms) + "," + format_double(d.ls_residual) + "," +
                      format_double(rep.max_gain_error_db) + "," + format_double(rep.max_value_error) + "," +
                      std::to_string(unstable_count(rep)) + "\n";
    } catch (const Error& e) {
      std::fprintf(stderr, "%s: %s failed: %s\n", c->name, to_string(m).c_str(), e.what());
      status = 1;
    }
  }
  write_text_file((dir / "summary.csv").string(), summary_text);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s: artifacts in %s (%.2f s)\n", c->name, dir.string().c_str(), secs);
  return status;
}

int cmd_validate(const std::vector<std::string>& files) {
  int status = 0;
  for (const auto& f : files) {
    try {
      const auto r = validate_file(f);
      std::printf("%s: ok (%s, %zu records)\n", f.c_str(), r.kind.c_str(), r.records);
    } catch (const Error& e) {
      std::printf("%s: INVALID: %s\n", f.c_str(), e.what());
      status = 1;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven controller design from frequency-response samples"};
  app.set_config("--config", "", "Key-value config file; keys are the long flag names");
  app.require_subcommand(1);
  ExperimentConfig cfg;

  app.add_option("--plant", cfg.plant, "Plant id: academic | transport");
  app.add_option("--xm", cfg.x_m, "Transport sensor location");
  app.add_option("--omega0", cfg.omega0, "Transport actuator natural frequency");
  app.add_option("--actuator-damping", cfg.actuator_damping, "Transport actuator damping m");
  app.add_option("--n", cfg.n, "Number of frequency samples");
  app.add_option("--wmin", cfg.wmin, "Lowest frequency (rad/s); accepts a^b");
  app.add_option("--wmax", cfg.wmax, "Highest frequency (rad/s); accepts a^b");
  app.add_flag("--linear", cfg.linear, "Linear instead of logarithmic spacing");
  auto* noise_opt = app.add_option("--noise", cfg.noise, "Multiplicative noise amplitude");
  app.add_option("--seed", cfg.seed, "Noise seed");
  app.add_option("--data", cfg.data, "Plant dataset CSV (skips sampling)");
  app.add_option("--reference", cfg.reference, "Reference kind: second-order | delayed-oscillatory");
  app.add_option("--ns", cfg.ns, "Number of reference members");
  app.add_option("--p", cfg.p, "Reference parameter(s) p")->delimiter(',');
  app.add_option("--ref-delay", cfg.ref_delay, "Delayed-oscillatory reference: delay");
  app.add_option("--ref-omega-n", cfg.ref_omega_n, "Delayed-oscillatory reference: natural frequency");
  app.add_option("--ref-damping", cfg.ref_damping, "Delayed-oscillatory reference: damping");
  app.add_option("--method", cfg.method, "loewner | aaa | vf");
  app.add_option("--order", cfg.order, "Controller order or 'auto'");
  app.add_option("--tol", cfg.tol, "Loewner rank tolerance (relative)");
  app.add_option("--aaa-tol", cfg.aaa_tol, "AAA stopping tolerance relative to max |K*|");
  app.add_option("--direct", cfg.direct, "VF direct term: on | off");
  app.add_option("--flip-unstable", cfg.flip_unstable, "VF unstable-pole reflection: on | off");
  app.add_option("--max-iters", cfg.max_iters, "VF iteration cap");
  app.add_option("--pole-tol", cfg.pole_tol, "VF pole convergence tolerance");
  app.add_option("--model", cfg.model, "Controller model JSON");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--t-end", cfg.t_end, "Step response horizon (s)");
  app.add_option("--t-points", cfg.t_points, "Step response sample count");

  auto* sample = app.add_subcommand("sample", "Sample a plant (plant.csv)")->fallthrough();
  auto* ideal = app.add_subcommand("ideal", "Ideal-controller samples (ideal.csv)")->fallthrough();
  auto* design = app.add_subcommand("design", "Fit a controller and write the design report")->fallthrough();
  auto* closedloop = app.add_subcommand("closedloop", "Closed-loop Bode table for a saved controller")->fallthrough();
  auto* step = app.add_subcommand("step", "Closed-loop step response for a saved controller")->fallthrough();
  auto* repro = app.add_subcommand("repro", "Run a named case study with all three engines")->fallthrough();
  std::string repro_case;
  repro->add_option("case", repro_case, "standard-academic | uncertain-academic | standard-transport | uncertain-transport")
      ->required();
  auto* validate = app.add_subcommand("validate", "Check emitted files against their schemas")->fallthrough();
  std::vector<std::string> files;
  validate->add_option("files", files, "Files to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sample) return cmd_sample(cfg);
    if (*ideal) return cmd_ideal(cfg);
    if (*design) return cmd_design(cfg);
    if (*closedloop) return cmd_closedloop(cfg);
    if (*step) return cmd_step(cfg);
    if (*repro) return cmd_repro(cfg, repro_case, noise_opt->count() > 0);
    if (*validate) return cmd_validate(files);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::too_many_members || e.code() == ErrorCode::unknown_method ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
