#include "branchpde/harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include "branchpde/errors.hpp"
#include "branchpde/metrics.hpp"

namespace branchpde {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object: " + path);
  return j;
}

void require_known_keys(const json& j, const std::set<std::string>& allowed,
                        const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown " + what + " field '" + it.key() + "'");
}

template <typename T>
void maybe_set(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

const std::set<std::string> kRunConfigKeys = {
    "preset",       "seed",          "tau",
    "t_end",        "n",             "n_u",
    "n_v",          "modes",         "grid",
    "workers",      "snapshot_times", "density_floor",
    "drift_cap",    "rate_cap",      "population_cap_factor",
    "mh_step_scale", "mh_burn_in",   "quadrature",
    "recenter_plots", "fd_safety",    "dump_particles"};

struct LoadedRunConfig {
  std::string preset;
  SolverConfig solver;
  double fd_safety = 0.5;
  bool tau_explicit = false;  // tau came from file or flag, not preset default
  bool dump_particles = false;
};

LoadedRunConfig build_run_config(const RunInvocation& inv) {
  json file = inv.config_path.empty() ? json::object() : load_json_file(inv.config_path);
  require_known_keys(file, kRunConfigKeys, "config");

  LoadedRunConfig out;
  out.preset = !inv.preset.empty() ? inv.preset : file.value("preset", std::string());
  if (out.preset.empty())
    throw ConfigError("no preset given (use --preset or a config file with \"preset\")");

  const PresetDefaults defaults = preset_defaults(out.preset);
  SolverConfig& cfg = out.solver;
  cfg.tau = defaults.tau;
  cfg.t_end = defaults.t_end;
  cfg.modes = defaults.modes;
  cfg.n = defaults.n;
  cfg.eval_grid = defaults.grid;

  out.tau_explicit = file.contains("tau") || inv.tau.has_value();
  maybe_set(file, "seed", cfg.seed);
  maybe_set(file, "tau", cfg.tau);
  maybe_set(file, "t_end", cfg.t_end);
  maybe_set(file, "n", cfg.n);
  maybe_set(file, "n_u", cfg.n_u);
  maybe_set(file, "n_v", cfg.n_v);
  maybe_set(file, "modes", cfg.modes);
  maybe_set(file, "grid", cfg.eval_grid);
  maybe_set(file, "workers", cfg.workers);
  maybe_set(file, "snapshot_times", cfg.snapshot_times);
  maybe_set(file, "density_floor", cfg.density_floor);
  maybe_set(file, "drift_cap", cfg.drift_cap);
  maybe_set(file, "rate_cap", cfg.rate_cap);
  maybe_set(file, "population_cap_factor", cfg.population_cap_factor);
  maybe_set(file, "mh_step_scale", cfg.mh.step_scale);
  maybe_set(file, "mh_burn_in", cfg.mh.burn_in);
  maybe_set(file, "quadrature", cfg.quadrature);
  maybe_set(file, "recenter_plots", cfg.recenter_plots);
  maybe_set(file, "fd_safety", out.fd_safety);
  maybe_set(file, "dump_particles", out.dump_particles);

  if (inv.seed) cfg.seed = *inv.seed;
  if (inv.tau) cfg.tau = *inv.tau;
  if (inv.t_end) cfg.t_end = *inv.t_end;
  if (inv.n) cfg.n = *inv.n;
  if (inv.n_u) cfg.n_u = *inv.n_u;
  if (inv.n_v) cfg.n_v = *inv.n_v;
  if (inv.modes) cfg.modes = *inv.modes;
  if (inv.grid) cfg.eval_grid = *inv.grid;
  if (inv.workers) cfg.workers = *inv.workers;
  if (inv.recenter_plots) cfg.recenter_plots = *inv.recenter_plots;
  if (inv.dump_particles) out.dump_particles = *inv.dump_particles;
  return out;
}

json solver_config_json(const std::string& preset, const SolverConfig& cfg, int dim,
                        double z_u, double z_v, bool dump_particles) {
  json j;
  j["preset"] = preset;
  j["dim"] = dim;
  j["seed"] = cfg.seed;
  j["tau"] = cfg.tau;
  j["t_end"] = cfg.t_end;
  j["n_u"] = cfg.n_u;
  j["n_v"] = cfg.n_v;
  j["modes"] = cfg.modes;
  j["eval_grid"] = cfg.eval_grid;
  j["workers"] = cfg.workers;
  j["snapshot_times"] = cfg.snapshot_times;
  j["density_floor"] = cfg.density_floor;
  j["drift_cap"] = cfg.drift_cap;
  j["rate_cap"] = cfg.rate_cap;
  j["population_cap_factor"] = cfg.population_cap_factor;
  j["mh_step_scale"] = cfg.mh.step_scale;
  j["mh_burn_in"] = cfg.mh.burn_in;
  j["quadrature"] = cfg.quadrature;
  j["recenter_plots"] = cfg.recenter_plots;
  j["dump_particles"] = dump_particles;
  j["z_u"] = z_u;
  j["z_v"] = z_v;
  return j;
}

fs::path default_run_dir(std::uint64_t seed) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  fs::path base = fs::path("runs") / (std::string(stamp) + "-seed" + std::to_string(seed));
  fs::path dir = base;
  for (int i = 2; fs::exists(dir); ++i) dir = base.string() + "-" + std::to_string(i);
  return dir;
}

fs::path prepare_run_dir(const std::string& requested, std::uint64_t seed) {
  fs::path dir = requested.empty() ? default_run_dir(seed) : fs::path(requested);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

void write_particle_artifacts(const fs::path& dir, const std::string& command,
                              const RunResult& result, RunRecord& record) {
  write_series_csv((dir / "series.csv").string(), result.series);
  for (const auto& snap : result.snapshots) {
    RunRecord::SnapshotRef ref;
    ref.step = snap.step;
    ref.t = snap.t;
    const std::string stem = "snap_" + std::to_string(snap.step);
    {
      const std::string grid_name = stem + "_u.csv";
      const auto values = snap.u.sample_grid(result.config.eval_grid);
      write_grid_csv((dir / grid_name).string(), snap.u.domain(), result.config.eval_grid,
                     values, result.config.recenter_plots);
      ref.files["u_grid"] = grid_name;
      const std::string coef_name = stem + "_u.coef";
      write_coef_file((dir / coef_name).string(), snap.u);
      ref.files["u_coef"] = coef_name;
    }
    if (snap.v) {
      const std::string grid_name = stem + "_v.csv";
      const auto values = snap.v->sample_grid(result.config.eval_grid);
      write_grid_csv((dir / grid_name).string(), snap.v->domain(), result.config.eval_grid,
                     values, result.config.recenter_plots);
      ref.files["v_grid"] = grid_name;
      const std::string coef_name = stem + "_v.coef";
      write_coef_file((dir / coef_name).string(), *snap.v);
      ref.files["v_coef"] = coef_name;
    }
    record.snapshots.push_back(std::move(ref));
  }
  record.command = command;
  record.series = result.series;
  record.status = result.status;
  record.warnings = result.warnings;
  record.timings_sec = result.timings_sec;
  record.seed = result.config.seed;
  write_run_json((dir / "run.json").string(), record);
}

void write_fd_artifacts(const fs::path& dir, const FdRunResult& result, bool recenter,
                        RunRecord& record) {
  write_series_csv((dir / "series.csv").string(), result.series);
  const int modes = record.config_echo.value("modes", 10);
  for (const auto& snap : result.snapshots) {
    RunRecord::SnapshotRef ref;
    ref.step = snap.step;
    ref.t = snap.t;
    const std::string stem = "snap_" + std::to_string(snap.step);
    {
      const std::string grid_name = stem + "_u.csv";
      write_grid_csv((dir / grid_name).string(), snap.u.domain, snap.u.n, snap.u.values,
                     recenter);
      ref.files["u_grid"] = grid_name;
      const std::string coef_name = stem + "_u.coef";
      write_coef_file((dir / coef_name).string(), project_grid(snap.u, modes));
      ref.files["u_coef"] = coef_name;
    }
    if (snap.v) {
      const std::string grid_name = stem + "_v.csv";
      write_grid_csv((dir / grid_name).string(), snap.v->domain, snap.v->n, snap.v->values,
                     recenter);
      ref.files["v_grid"] = grid_name;
      const std::string coef_name = stem + "_v.coef";
      write_coef_file((dir / coef_name).string(), project_grid(*snap.v, modes));
      ref.files["v_coef"] = coef_name;
    }
    record.snapshots.push_back(std::move(ref));
  }
  record.series = result.series;
  record.status = result.status;
  write_run_json((dir / "run.json").string(), record);
}

fs::path execute_run(const RunInvocation& inv) {
  const LoadedRunConfig loaded = build_run_config(inv);
  const std::string& preset = loaded.preset;

  RunRecord record;
  record.version = artifact_version();
  record.command = inv.command;

  if (inv.command == "run-fd") {
    FdConfig fd;
    fd.grid = loaded.solver.eval_grid;
    fd.tau = loaded.tau_explicit ? loaded.solver.tau : -1.0;  // default: stability-driven
    fd.t_end = loaded.solver.t_end;
    fd.safety = loaded.fd_safety;
    fd.snapshot_times = loaded.solver.snapshot_times;

    json echo;
    echo["preset"] = preset;
    echo["dim"] = 2;
    echo["fd_grid"] = fd.grid;
    echo["tau_requested"] = fd.tau;
    echo["t_end"] = fd.t_end;
    echo["fd_safety"] = fd.safety;
    echo["snapshot_times"] = fd.snapshot_times;
    echo["modes"] = loaded.solver.modes;
    echo["recenter_plots"] = loaded.solver.recenter_plots;
    record.config_echo = echo;
    record.config_hash = std::to_string(fnv1a(inv.command + echo.dump()));

    FdRunResult result = preset_is_two_field(preset)
                             ? run_fd_ks(make_ks_preset(preset), fd)
                             : run_fd_scalar(make_scalar_preset(preset), fd);
    const fs::path dir = prepare_run_dir(inv.out_dir, 0);
    write_fd_artifacts(dir, result, loaded.solver.recenter_plots, record);
    if (!result.status.completed) throw BlowupError("fd run failed: " + result.status.reason);
    return dir;
  }

  const bool two_field = preset_is_two_field(preset);
  if (inv.command == "run-scalar" && two_field)
    throw ConfigError("preset '" + preset + "' is a two-field model; use run-ks");
  if (inv.command == "run-ks" && !two_field)
    throw ConfigError("preset '" + preset + "' is a scalar model; use run-scalar");

  RunResult result = two_field ? run_ks(make_ks_preset(preset), loaded.solver)
                               : run_scalar(make_scalar_preset(preset), loaded.solver);
  record.config_echo = solver_config_json(preset, result.config, 2, result.z_u, result.z_v,
                                          loaded.dump_particles);
  record.config_hash = std::to_string(fnv1a(inv.command + record.config_echo.dump()));
  const fs::path dir = prepare_run_dir(inv.out_dir, result.config.seed);
  write_particle_artifacts(dir, inv.command, result, record);
  if (loaded.dump_particles && result.particles_u)
    write_particle_csv((dir / "particles_u.csv").string(), *result.particles_u);
  if (loaded.dump_particles && result.particles_v)
    write_particle_csv((dir / "particles_v.csv").string(), *result.particles_v);
  if (!result.status.completed)
    throw BlowupError("run failed at step " + std::to_string(result.status.failed_step) + ": " +
                      result.status.reason);
  return dir;
}

namespace {

const std::set<std::string> kConvergenceKeys = {"preset", "sweep",  "n_ref", "seeds",
                                                "ref_seed", "tau",  "t_end", "modes",
                                                "grid",    "workers"};

}  // namespace

ConvergenceReport execute_convergence(const std::string& config_path,
                                      const std::string& out_dir) {
  json cfg = load_json_file(config_path);
  require_known_keys(cfg, kConvergenceKeys, "convergence config");

  const std::string preset = cfg.value("preset", std::string());
  if (preset.empty()) throw ConfigError("convergence config needs a preset");
  std::vector<std::int64_t> sweep;
  maybe_set(cfg, "sweep", sweep);
  std::vector<std::uint64_t> seeds;
  maybe_set(cfg, "seeds", seeds);
  std::int64_t n_ref = 0;
  maybe_set(cfg, "n_ref", n_ref);
  std::uint64_t ref_seed = 10'000;
  maybe_set(cfg, "ref_seed", ref_seed);

  if (seeds.empty()) seeds = {1, 2, 3};
  std::set<std::int64_t> distinct(sweep.begin(), sweep.end());
  if (distinct.size() < 2)
    throw ConfigError("convergence sweep needs at least two distinct particle counts");
  if (sweep.size() * seeds.size() < 3)
    throw ConfigError("convergence needs at least 3 (N, seed) error points");
  if (n_ref <= 0) throw ConfigError("convergence config needs n_ref > 0");

  const PresetDefaults defaults = preset_defaults(preset);
  SolverConfig base;
  base.tau = defaults.tau;
  base.t_end = defaults.t_end;
  base.modes = defaults.modes;
  base.eval_grid = defaults.grid;
  maybe_set(cfg, "tau", base.tau);
  maybe_set(cfg, "t_end", base.t_end);
  maybe_set(cfg, "modes", base.modes);
  maybe_set(cfg, "grid", base.eval_grid);
  maybe_set(cfg, "workers", base.workers);
  base.snapshot_times = {base.t_end};

  const bool two_field = preset_is_two_field(preset);
  const fs::path out = out_dir.empty() ? fs::path("runs") / "convergence" : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  auto run_once = [&](std::int64_t n, std::uint64_t seed) {
    SolverConfig c = base;
    c.n = n;
    c.seed = seed;
    RunResult r = two_field ? run_ks(make_ks_preset(preset), c)
                            : run_scalar(make_scalar_preset(preset), c);
    if (!r.status.completed)
      throw BlowupError("convergence run (n=" + std::to_string(n) +
                        ", seed=" + std::to_string(seed) + ") failed: " + r.status.reason);
    if (r.snapshots.empty()) throw BlowupError("convergence run produced no final snapshot");
    return r.snapshots.back().u;  // u~ at t_end
  };

  // reference run, cached on disk keyed by its config hash
  json ref_echo;
  ref_echo["preset"] = preset;
  ref_echo["n"] = n_ref;
  ref_echo["seed"] = ref_seed;
  ref_echo["tau"] = base.tau;
  ref_echo["t_end"] = base.t_end;
  ref_echo["modes"] = base.modes;
  const std::string ref_hash = std::to_string(fnv1a(ref_echo.dump()));
  const fs::path ref_dir = out / "reference";
  const fs::path ref_marker = ref_dir / "reference.json";
  const fs::path ref_coef = ref_dir / "final_u.coef";

  bool reuse = false;
  if (fs::exists(ref_marker) && fs::exists(ref_coef)) {
    try {
      json marker = load_json_file(ref_marker.string());
      reuse = marker.value("config_hash", std::string()) == ref_hash;
    } catch (const ConfigError&) {
      reuse = false;
    }
  }
  SpectralField reference = [&] {
    if (reuse) return read_coef_file(ref_coef.string());
    SpectralField field = run_once(n_ref, ref_seed);
    fs::create_directories(ref_dir, ec);
    write_coef_file(ref_coef.string(), field);
    json marker;
    marker["config_hash"] = ref_hash;
    marker["config"] = ref_echo;
    std::ofstream mark(ref_marker.string());
    mark << marker.dump(2) << '\n';
    return field;
  }();
  const auto ref_values = reference.sample_grid(base.eval_grid);

  ConvergenceReport report;
  std::vector<std::pair<double, double>> fit_pairs;
  for (std::int64_t n : sweep)
    for (std::uint64_t seed : seeds) {
      const SpectralField field = run_once(n, seed);
      const auto values = field.sample_grid(base.eval_grid);
      const double err = rel_l2(values, ref_values);
      report.errors.emplace_back(n, seed, err);
      fit_pairs.emplace_back(static_cast<double>(n), err);
    }
  report.fit = fit_convergence_slope(fit_pairs);

  // estimated particle-step volume; flags paper-scale configs as long-running
  double volume = static_cast<double>(n_ref);
  for (std::int64_t n : sweep) volume += static_cast<double>(n) * seeds.size();
  volume *= (two_field ? 2.0 : 1.0) * std::ceil(base.t_end / base.tau);

  report.csv_path = out / "convergence.csv";
  std::ofstream csv(report.csv_path);
  if (!csv) throw IoError("cannot write " + report.csv_path.string());
  if (volume > 2e9)
    csv << "# warning: long-running configuration (~" << format_g17(volume)
        << " particle-steps)\n";
  csv << "metric,n,seed,value\n";
  std::map<std::int64_t, std::pair<double, int>> means;
  for (const auto& [n, seed, err] : report.errors) {
    csv << "error_u," << n << ',' << seed << ',' << format_g17(err) << '\n';
    means[n].first += err;
    means[n].second += 1;
  }
  for (const auto& [n, acc] : means)
    csv << "mean_error_u," << n << ",," << format_g17(acc.first / acc.second) << '\n';
  csv << "slope,,," << format_g17(report.fit.slope) << '\n';
  csv << "intercept,,," << format_g17(report.fit.intercept) << '\n';
  csv << "residual,,," << format_g17(report.fit.residual) << '\n';
  if (!csv) throw IoError("write failed: " + report.csv_path.string());
  return report;
}

std::vector<CompareRow> execute_compare(const std::string& dir_a, const std::string& dir_b,
                                        std::optional<double> h_minus_s,
                                        const std::string& out_csv) {
  const RunRecord rec_a = read_run_json((fs::path(dir_a) / "run.json").string());
  const RunRecord rec_b = read_run_json((fs::path(dir_b) / "run.json").string());

  auto schedule = [](const RunRecord& r) {
    std::vector<double> t;
    for (const auto& s : r.snapshots) t.push_back(s.t);
    return t;
  };
  const auto ta = schedule(rec_a);
  const auto tb = schedule(rec_b);
  auto fmt_times = [](const std::vector<double>& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + format_g17(t[i]);
    return s + "]";
  };
  bool match = ta.size() == tb.size();
  for (std::size_t i = 0; match && i < ta.size(); ++i)
    match = std::abs(ta[i] - tb[i]) <= 1e-12 * std::max(1.0, std::abs(ta[i]));
  if (!match)
    throw ConfigError("snapshot schedules differ: A=" + fmt_times(ta) + " B=" + fmt_times(tb));

  const int dim_a = rec_a.config_echo.value("dim", 2);
  const int dim_b = rec_b.config_echo.value("dim", 2);
  if (dim_a != dim_b) throw ConfigError("runs have different dimensions");

  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < rec_a.snapshots.size(); ++i) {
    const auto& sa = rec_a.snapshots[i];
    const auto& sb = rec_b.snapshots[i];
    for (const char* field : {"u", "v"}) {
      const std::string grid_key = std::string(field) + "_grid";
      const std::string coef_key = std::string(field) + "_coef";
      if (sa.files.count(grid_key) && sb.files.count(grid_key)) {
        const GridField ga =
            read_grid_csv((fs::path(dir_a) / sa.files.at(grid_key)).string(), dim_a);
        const GridField gb =
            read_grid_csv((fs::path(dir_b) / sb.files.at(grid_key)).string(), dim_b);
        if (ga.n != gb.n)
          throw ConfigError("snapshot grids differ at t=" + format_g17(sa.t) + ": " +
                            std::to_string(ga.n) + " vs " + std::to_string(gb.n));
        rows.push_back({std::string("rel_l2_") + field, sa.t, rel_l2(ga.values, gb.values)});
      }
      if (h_minus_s && sa.files.count(coef_key) && sb.files.count(coef_key)) {
        const SpectralField fa = read_coef_file((fs::path(dir_a) / sa.files.at(coef_key)).string());
        const SpectralField fb = read_coef_file((fs::path(dir_b) / sb.files.at(coef_key)).string());
        rows.push_back({std::string("h_minus_s_") + field, sa.t,
                        h_minus_s_distance(fa, fb, *h_minus_s)});
      }
    }
  }

  const std::string path = out_csv.empty() ? "metrics.csv" : out_csv;
  std::ofstream csv(path);
  if (!csv) throw IoError("cannot write " + path);
  csv << "metric,t,value\n";
  for (const auto& row : rows)
    csv << row.metric << ',' << format_g17(row.t) << ',' << format_g17(row.value) << '\n';
  if (!csv) throw IoError("write failed: " + path);
  return rows;
}

}  // namespace branchpde
