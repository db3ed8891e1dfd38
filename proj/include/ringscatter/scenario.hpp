#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/coupling.hpp"
#include "ringscatter/dynamics.hpp"
#include "ringscatter/farfield.hpp"
#include "ringscatter/geometry.hpp"
#include "ringscatter/io.hpp"
#include "ringscatter/polarization.hpp"
#include "ringscatter/spectrum.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

// Scenario layer: JSON config in, deterministic CSV/JSON files out.  Works on
// concrete doubles; everything below it is the templated core.
namespace ringscatter {

using nlohmann::json;

inline const std::set<std::string>& known_outputs() {
  static const std::set<std::string> k{"spectrum", "weightings", "trace", "farfield", "symmetry"};
  return k;
}

struct SweepSpec {
  std::string axis;  // "r", "d_z" or "s"
  std::vector<double> values;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::string name = "scenario";
  RingSpec<double> ring;
  bool d_z_given = false, n_z_given = false, s_given = false;
  Polarization polarization = Polarization::linear_x;
  std::vector<int> oam;
  std::vector<std::string> outputs{"spectrum", "weightings", "trace", "farfield", "symmetry"};
  int grid_n_theta = 181;
  int grid_n_phi = 360;
  int time_n = 200;
  double time_min = 1e-3;
  double time_max = 20.0;
  std::optional<SweepSpec> sweep;

  bool wants(const std::string& out) const {
    return std::find(outputs.begin(), outputs.end(), out) != outputs.end();
  }
};

struct Diagnostic {
  enum class Severity { info, warning, error } severity;
  std::string message;
};

inline const char* to_string(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::info:    return "info";
    case Diagnostic::Severity::warning: return "warning";
    case Diagnostic::Severity::error:   return "error";
  }
  return "?";
}

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key \"" + key + "\" in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

// Shortest round-trip decimal form, for directory names.
inline std::string format_shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  detail::check_keys(j,
                     {"schema_version", "name", "ring", "polarization", "oam", "outputs", "grid",
                      "time_grid", "sweep"},
                     "config root");

  ScenarioConfig cfg;
  cfg.schema_version = detail::get_or(j, "schema_version", 1);
  if (cfg.schema_version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version) +
                      "; this build understands version 1");
  cfg.name = detail::get_or<std::string>(j, "name", "scenario");
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos)
    throw ConfigError("name must be a non-empty string without '/'");

  if (!j.contains("ring")) throw ConfigError("config requires a \"ring\" object");
  const json& ring = j.at("ring");
  if (!ring.is_object()) throw ConfigError("\"ring\" must be an object");
  detail::check_keys(ring, {"n_phi", "r", "stack", "n_z", "d_z", "s", "min_separation"}, "ring");
  cfg.ring.n_phi = detail::get_or(ring, "n_phi", 0);
  cfg.ring.r = detail::get_or(ring, "r", 0.0);
  const std::string stack = detail::get_or<std::string>(ring, "stack", "single_ring");
  if (stack == "single_ring") cfg.ring.stack = StackKind::single_ring;
  else if (stack == "z_stack") cfg.ring.stack = StackKind::z_stack;
  else if (stack == "r_stack") cfg.ring.stack = StackKind::r_stack;
  else throw ConfigError("unknown ring.stack \"" + stack + "\"; expected single_ring, z_stack or r_stack");
  cfg.n_z_given = ring.contains("n_z");
  cfg.d_z_given = ring.contains("d_z");
  cfg.s_given = ring.contains("s");
  cfg.ring.n_z = detail::get_or(ring, "n_z", 1);
  cfg.ring.d_z = detail::get_or(ring, "d_z", 0.0);
  cfg.ring.s = detail::get_or(ring, "s", 1);
  cfg.ring.min_separation = detail::get_or(ring, "min_separation", 1e-6);

  cfg.polarization = parse_polarization(detail::get_or<std::string>(j, "polarization", "linear_x"));

  if (!j.contains("oam")) throw ConfigError("config requires an \"oam\" list of winding numbers");
  try {
    cfg.oam = j.at("oam").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad \"oam\" list: ") + e.what());
  }

  if (j.contains("outputs")) {
    try {
      cfg.outputs = j.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad \"outputs\" list: ") + e.what());
    }
    for (const auto& o : cfg.outputs)
      if (!known_outputs().count(o))
        throw ConfigError("unknown output \"" + o +
                          "\"; expected spectrum, weightings, trace, farfield or symmetry");
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    detail::check_keys(g, {"n_theta", "n_phi"}, "grid");
    cfg.grid_n_theta = detail::get_or(g, "n_theta", cfg.grid_n_theta);
    cfg.grid_n_phi = detail::get_or(g, "n_phi", cfg.grid_n_phi);
  }
  if (j.contains("time_grid")) {
    const json& t = j.at("time_grid");
    detail::check_keys(t, {"n", "t_min", "t_max"}, "time_grid");
    cfg.time_n = detail::get_or(t, "n", cfg.time_n);
    cfg.time_min = detail::get_or(t, "t_min", cfg.time_min);
    cfg.time_max = detail::get_or(t, "t_max", cfg.time_max);
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    detail::check_keys(s, {"axis", "values"}, "sweep");
    SweepSpec sweep;
    sweep.axis = detail::get_or<std::string>(s, "axis", "");
    try {
      sweep.values = s.at("values").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad sweep.values: ") + e.what());
    }
    cfg.sweep = std::move(sweep);
  }
  return cfg;
}

inline ScenarioConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

// KEY.SUBKEY=VALUE override on the raw JSON document; VALUE is parsed as JSON
// when possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key.path=value, got \"" + spec + "\"");
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  json* node = &doc;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override path has an empty segment: \"" + path + "\"");
    if (dot == std::string::npos) {
      json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
      (*node)[key] = value.is_discarded() ? json(raw) : value;
      return;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null())
      throw ConfigError("override path \"" + path + "\" descends through a non-object");
    start = dot + 1;
  }
}

inline bool sweeps_axis(const ScenarioConfig& cfg, const std::string& axis) {
  return cfg.sweep && cfg.sweep->axis == axis;
}

inline std::vector<Diagnostic> validate(const ScenarioConfig& cfg) {
  std::vector<Diagnostic> diags;
  auto error = [&](std::string m) { diags.push_back({Diagnostic::Severity::error, std::move(m)}); };
  auto warn = [&](std::string m) { diags.push_back({Diagnostic::Severity::warning, std::move(m)}); };
  auto info = [&](std::string m) { diags.push_back({Diagnostic::Severity::info, std::move(m)}); };

  if (cfg.ring.n_phi < 1) error("ring.n_phi must be a positive integer");
  if (!(cfg.ring.r > 0) && !sweeps_axis(cfg, "r")) error("ring.r must be positive");
  if (!(cfg.ring.min_separation > 0)) error("ring.min_separation must be positive");

  const bool is_z = cfg.ring.stack == StackKind::z_stack;
  const bool is_r = cfg.ring.stack == StackKind::r_stack;
  if (is_z) {
    if (cfg.ring.n_z < 1) error("ring.n_z must be a positive integer");
    if (cfg.ring.n_z > 1 && !(cfg.ring.d_z > 0) && !sweeps_axis(cfg, "d_z"))
      error("ring.d_z must be positive for a z_stack of more than one ring");
  } else {
    if (cfg.d_z_given) warn("ring.d_z is ignored for stack kind " + std::string(to_string(cfg.ring.stack)));
    if (cfg.n_z_given) warn("ring.n_z is ignored for stack kind " + std::string(to_string(cfg.ring.stack)));
  }
  if (is_r) {
    if (cfg.ring.s < 1) error("ring.s must be a positive integer");
  } else if (cfg.s_given) {
    warn("ring.s is ignored for stack kind " + std::string(to_string(cfg.ring.stack)));
  }

  if (cfg.oam.empty()) error("oam list must not be empty");
  if (cfg.ring.n_phi >= 1)
    for (int l : cfg.oam)
      if (l < 0 || l >= cfg.ring.n_phi)
        info("oam " + std::to_string(l) + " reduced mod n_phi to " +
             std::to_string(((l % cfg.ring.n_phi) + cfg.ring.n_phi) % cfg.ring.n_phi));

  if (cfg.outputs.empty()) warn("outputs list is empty; only manifests will be written");

  if (cfg.grid_n_theta < 2) error("grid.n_theta must be at least 2");
  if (cfg.grid_n_phi < 1) error("grid.n_phi must be at least 1");
  if (cfg.wants("symmetry") && cfg.ring.n_phi >= 1) {
    if (cfg.ring.n_phi % 4 == 0 && cfg.grid_n_phi % 4 != 0)
      error("symmetry output needs grid.n_phi divisible by 4; got " + std::to_string(cfg.grid_n_phi));
    const bool linear_pol = cfg.polarization == Polarization::linear_x ||
                            cfg.polarization == Polarization::linear_y;
    if (!linear_pol && cfg.grid_n_phi % cfg.ring.n_phi != 0)
      error("symmetry output needs grid.n_phi divisible by ring.n_phi = " +
            std::to_string(cfg.ring.n_phi) + "; got " + std::to_string(cfg.grid_n_phi));
  }

  if (cfg.time_n < 2) error("time_grid.n must be at least 2");
  if (!(cfg.time_min > 0) || !(cfg.time_max > cfg.time_min))
    error("time_grid requires 0 < t_min < t_max");

  if (cfg.sweep) {
    const auto& sw = *cfg.sweep;
    if (sw.axis != "r" && sw.axis != "d_z" && sw.axis != "s")
      error("sweep.axis must be one of r, d_z, s");
    if (sw.values.empty()) error("sweep.values must not be empty");
    if (sw.axis == "d_z" && !is_z) error("sweep over d_z requires ring.stack = z_stack");
    if (sw.axis == "s" && !is_r) error("sweep over s requires ring.stack = r_stack");
    for (double v : sw.values) {
      if (!(v > 0)) error("sweep.values must be positive");
      if (sw.axis == "s" && v != std::floor(v)) error("sweep over s needs integer values");
    }
  }
  return diags;
}

struct RunOptions {
  std::filesystem::path out_root = "out";
  int workers = 0;  // 0 = hardware concurrency
  bool dump_matrix = false;
};

struct TaskResult {
  std::filesystem::path dir;
  double sweep_value = 0;  // 0 when no sweep
  int l = 0;
  int n_atoms = 0;
  std::vector<std::string> notes;
};

struct RunReport {
  std::vector<Diagnostic> diagnostics;
  std::vector<TaskResult> tasks;
};

namespace detail {

inline json config_json(const ScenarioConfig& cfg, const RingSpec<double>& ring, int l_raw, int l_reduced) {
  json ring_j{{"n_phi", ring.n_phi}, {"r", ring.r}, {"stack", to_string(ring.stack)},
              {"min_separation", ring.min_separation}};
  if (ring.stack == StackKind::z_stack) {
    ring_j["n_z"] = ring.n_z;
    ring_j["d_z"] = ring.d_z;
  }
  if (ring.stack == StackKind::r_stack) ring_j["s"] = ring.s;
  return json{{"schema_version", cfg.schema_version},
              {"name", cfg.name},
              {"ring", ring_j},
              {"polarization", to_string(cfg.polarization)},
              {"l", l_raw},
              {"l_reduced", l_reduced},
              {"outputs", cfg.outputs},
              {"grid", {{"n_theta", cfg.grid_n_theta}, {"n_phi", cfg.grid_n_phi}}},
              {"time_grid", {{"n", cfg.time_n}, {"t_min", cfg.time_min}, {"t_max", cfg.time_max}}}};
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

inline json symmetry_json(const SymmetryReport<double>& rep) {
  json j;
  j["c4_deviation"] = rep.c4_deviation ? json(*rep.c4_deviation) : json();
  j["cn_deviation"] = rep.cn_deviation ? json(*rep.cn_deviation) : json();
  j["mirror_l_deviation"] = rep.mirror_l_deviation;
  j["polar_forward"] = rep.polar_forward;
  j["polar_backward"] = rep.polar_backward;
  j["polar_ratio"] = rep.polar_ratio;  // dumped as null when 0/0
  j["forward_hemisphere_max"] = rep.forward_hemisphere_max;
  j["backward_hemisphere_max"] = rep.backward_hemisphere_max;
  j["hemisphere_ratio"] = rep.hemisphere_ratio;
  j["peak_theta"] = rep.peak_theta;
  j["peak_phi"] = rep.peak_phi;
  j["peak_value"] = rep.peak_value;
  j["fwhm_theta"] = rep.fwhm_theta;
  j["fwhm_phi"] = rep.fwhm_phi;
  j["azimuthal_peak_count"] = rep.azimuthal_peak_count;
  j["azimuthal_peak_spread"] = rep.azimuthal_peak_spread;
  return j;
}

}  // namespace detail

// Run one (sweep value, l) work item into dir.  Returns notes for the report.
inline TaskResult run_task(const ScenarioConfig& cfg, const RingSpec<double>& ring, double sweep_value,
                           int l, const std::filesystem::path& dir, bool dump_matrix) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  TaskResult result;
  result.dir = dir;
  result.sweep_value = sweep_value;
  result.l = l;

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json timings;
  const auto t_start = clock::now();
  auto elapsed = [&](clock::time_point from) {
    return std::chrono::duration<double>(clock::now() - from).count();
  };

  const auto array = build_array(ring);
  const auto field = make_field(array, cfg.polarization);
  result.n_atoms = array.size();
  std::vector<std::string> written;

  auto t0 = clock::now();
  const auto cm = build_matrix(array, field);
  timings["build_matrix_seconds"] = elapsed(t0);
  if (dump_matrix) {
    write_matrix_csv(dir / "coupling_matrix.csv", cm);
    written.push_back("coupling_matrix.csv");
  }

  t0 = clock::now();
  const auto sys = eigendecompose(cm);
  timings["eigendecompose_seconds"] = elapsed(t0);
  const auto rates = decay_rates(sys);
  const double sum_dev = sum_rule_deviation(sys);
  if (sum_dev > 1e-9)
    throw ConsistencyError("sum rule violated: relative deviation " + std::to_string(sum_dev));

  if (cfg.wants("spectrum")) {
    write_spectrum_csv(dir / "spectrum.csv", sys, rates);
    written.push_back("spectrum.csv");
  }

  auto state = hpi_state(array, l);
  const VecX<double> times = default_time_grid<double>(cfg.time_n, cfg.time_min, cfg.time_max);

  t0 = clock::now();
  if (sys.ill_conditioned) {
    result.notes.push_back("eigenbasis ill-conditioned (cond = " +
                           std::to_string(sys.condition_number) +
                           "); trace computed by direct propagation, weightings skipped");
    if (cfg.wants("trace")) {
      write_trace_csv(dir / "trace.csv", propagate_oracle(cm, state, times));
      written.push_back("trace.csv");
    }
  } else {
    state = project(state, sys);
    if (cfg.wants("weightings")) {
      write_weightings_csv(dir / "weightings.csv", weightings(state));
      written.push_back("weightings.csv");
    }
    if (cfg.wants("trace")) {
      write_trace_csv(dir / "trace.csv", evolve(state, sys, times));
      written.push_back("trace.csv");
    }
  }
  timings["dynamics_seconds"] = elapsed(t0);

  std::optional<FarFieldMap<double>> map;
  if (cfg.wants("farfield") || cfg.wants("symmetry")) {
    t0 = clock::now();
    map = far_field_map(array, field, l, cfg.grid_n_theta, cfg.grid_n_phi, /*threads=*/1);
    timings["farfield_seconds"] = elapsed(t0);
    if (cfg.wants("farfield")) {
      write_farfield_csv(dir / "farfield.csv", *map);
      written.push_back("farfield.csv");
    }
    if (map->clamped > 0)
      result.notes.push_back("clamped " + std::to_string(map->clamped) +
                             " roundoff-negative far-field values (min raw " +
                             format_g17(map->min_raw_value) + ")");
    if (cfg.wants("symmetry")) {
      t0 = clock::now();
      const auto rep = symmetry_report(*map, array, field, /*threads=*/1);
      timings["symmetry_seconds"] = elapsed(t0);
      detail::write_json_file(dir / "symmetry.json", detail::symmetry_json(rep));
      written.push_back("symmetry.json");
    }
  }

  json manifest;
  manifest["config"] = detail::config_json(cfg, ring, l, state.l);
  if (cfg.sweep) manifest["config"]["sweep_axis"] = cfg.sweep->axis;
  if (cfg.sweep) manifest["config"]["sweep_value"] = sweep_value;
  manifest["checks"] = {
      {"sum_rule_relative_deviation", sum_dev},
      {"sum_rule_pass", sum_dev <= 1e-9},
      {"min_f_eigenvalue", cm.min_f_eigenvalue},
      {"condition_number", sys.condition_number},
      {"ill_conditioned", sys.ill_conditioned},
      {"max_eigen_residual", sys.max_residual},
      {"decay_rates_clamped", rates.clamped},
  };
  if (map) {
    manifest["checks"]["farfield_clamped"] = map->clamped;
    manifest["checks"]["farfield_max_imag_residue"] = map->max_imag_residue;
    manifest["checks"]["farfield_min_raw_value"] = map->min_raw_value;
  }
  manifest["notes"] = result.notes;
  manifest["files"] = written;
  detail::write_json_file(dir / "manifest.json", manifest);

  // Wall-clock timings are the one non-reproducible output; they live in
  // their own file so everything else is byte-stable across runs.
  timings["total_seconds"] = elapsed(t_start);
  detail::write_json_file(dir / "timings.json", timings);
  return result;
}

inline RunReport run(const ScenarioConfig& cfg, const RunOptions& opts) {
  namespace fs = std::filesystem;
  RunReport report;
  report.diagnostics = validate(cfg);
  std::string errors;
  for (const auto& d : report.diagnostics)
    if (d.severity == Diagnostic::Severity::error) errors += (errors.empty() ? "" : "; ") + d.message;
  if (!errors.empty()) throw ConfigError(errors);

  struct Task {
    RingSpec<double> ring;
    double sweep_value;
    int l;
    fs::path dir;
    bool dump;
  };
  std::vector<Task> tasks;
  const fs::path base = opts.out_root / cfg.name;

  const int n_sweep = cfg.sweep ? static_cast<int>(cfg.sweep->values.size()) : 1;
  for (int sv = 0; sv < n_sweep; ++sv) {
    RingSpec<double> ring = cfg.ring;
    double value = 0;
    fs::path level = base / "base";
    if (cfg.sweep) {
      value = cfg.sweep->values[sv];
      if (cfg.sweep->axis == "r") ring.r = value;
      if (cfg.sweep->axis == "d_z") ring.d_z = value;
      if (cfg.sweep->axis == "s") ring.s = static_cast<int>(value);
      level = base / (cfg.sweep->axis + "_" + detail::format_shortest(value));
    }
    for (size_t li = 0; li < cfg.oam.size(); ++li)
      tasks.push_back({ring, value, cfg.oam[li], level / std::to_string(cfg.oam[li]),
                       opts.dump_matrix && li == 0});
  }

  report.tasks.resize(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        report.tasks[i] =
            run_task(cfg, tasks[i].ring, tasks[i].sweep_value, tasks[i].l, tasks[i].dir, tasks[i].dump);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  int n_workers = opts.workers > 0 ? opts.workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp<int>(n_workers, 1, static_cast<int>(tasks.size()));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return report;
}

}  // namespace ringscatter
