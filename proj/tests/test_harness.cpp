#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "branchpde/errors.hpp"
#include "branchpde/harness.hpp"

using namespace branchpde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "branchpde_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunInvocation tiny_ks(const fs::path& out, int workers) {
  RunInvocation inv;
  inv.command = "run-ks";
  inv.preset = "ks-linear";
  inv.out_dir = out.string();
  inv.seed = 7;
  inv.tau = 1e-3;
  inv.t_end = 5e-3;
  inv.n = 1500;
  inv.modes = 5;
  inv.grid = 24;
  inv.workers = workers;
  return inv;
}

}  // namespace

TEST_CASE("run-scalar with zero horizon writes one snapshot and parses back") {
  const auto base = fresh_dir("scalar_t0");
  RunInvocation inv;
  inv.command = "run-scalar";
  inv.preset = "allen-cahn";
  inv.out_dir = (base / "run").string();
  inv.seed = 3;
  inv.t_end = 0.0;
  inv.n = 500;
  inv.modes = 4;
  inv.grid = 16;
  const auto dir = execute_run(inv);
  CHECK(fs::exists(dir / "run.json"));
  CHECK(fs::exists(dir / "series.csv"));
  CHECK(fs::exists(dir / "snap_0_u.csv"));
  CHECK(fs::exists(dir / "snap_0_u.coef"));
  const auto record = read_run_json((dir / "run.json").string());
  CHECK(record.status.completed);
  CHECK(record.command == "run-scalar");
  CHECK(record.config_echo.at("preset") == "allen-cahn");
  // every resolved default is echoed
  for (const char* key : {"tau", "t_end", "n_u", "modes", "density_floor", "drift_cap",
                          "rate_cap", "population_cap_factor", "mh_step_scale", "mh_burn_in",
                          "snapshot_times", "eval_grid", "z_u"})
    CHECK(record.config_echo.contains(key));
  const auto series = read_series_csv((dir / "series.csv").string());
  REQUIRE(series.size() == 1);
  CHECK(series[0].count_u == 500);
}

TEST_CASE("byte-identical reruns across seeds and worker counts") {
  const auto base = fresh_dir("determinism");
  const auto d1 = execute_run(tiny_ks(base / "w1", 1));
  const auto d2 = execute_run(tiny_ks(base / "w2", 2));
  const auto d4 = execute_run(tiny_ks(base / "w4", 4));
  const auto series1 = slurp(d1 / "series.csv");
  CHECK(series1 == slurp(d2 / "series.csv"));
  CHECK(series1 == slurp(d4 / "series.csv"));
  for (const char* name : {"snap_0_u.csv", "snap_5_u.coef", "snap_5_v.csv"}) {
    CHECK(slurp(d1 / name) == slurp(d2 / name));
    CHECK(slurp(d1 / name) == slurp(d4 / name));
  }
  // a different seed must change the bytes
  auto inv = tiny_ks(base / "seed8", 1);
  inv.seed = 8;
  const auto d8 = execute_run(inv);
  CHECK(series1 != slurp(d8 / "series.csv"));
}

TEST_CASE("config file drives a run; flags override; unknown keys rejected") {
  const auto base = fresh_dir("config");
  const auto cfg_path = base / "run.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"preset": "ks-linear", "tau": 1e-3, "t_end": 2e-3, "n": 400,)"
        << R"( "modes": 4, "grid": 12, "seed": 5})";
  }
  RunInvocation inv;
  inv.command = "run-ks";
  inv.config_path = cfg_path.string();
  inv.out_dir = (base / "out").string();
  inv.t_end = 1e-3;  // flag override: one step only
  const auto dir = execute_run(inv);
  const auto series = read_series_csv((dir / "series.csv").string());
  CHECK(series.size() == 2);

  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"preset": "ks-linear", "taa": 1e-3})";
  }
  CHECK_THROWS_AS(execute_run(inv), ConfigError);
}

TEST_CASE("preset and command must agree") {
  RunInvocation inv;
  inv.command = "run-scalar";
  inv.preset = "ks-linear";
  CHECK_THROWS_AS(execute_run(inv), ConfigError);
  inv.command = "run-ks";
  inv.preset = "allen-cahn";
  CHECK_THROWS_AS(execute_run(inv), ConfigError);
  inv.preset = "no-such-preset";
  CHECK_THROWS_AS(execute_run(inv), ConfigError);
}

TEST_CASE("dump-particles writes the debug CSV for both populations") {
  const auto base = fresh_dir("dump");
  auto inv = tiny_ks(base / "run", 0);
  inv.dump_particles = true;
  const auto dir = execute_run(inv);
  for (const char* name : {"particles_u.csv", "particles_v.csv"}) {
    REQUIRE(fs::exists(dir / name));
    std::ifstream in(dir / name);
    std::string header;
    std::getline(in, header);
    CHECK(header == "id,x1,x2");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) ++rows;
    // f_u = 0 pins the u-count at N; the v-population branches freely
    if (std::string(name) == "particles_u.csv")
      CHECK(rows == 1500);
    else
      CHECK(rows > 0);
  }
}

TEST_CASE("compare: a run against itself is identically zero") {
  const auto base = fresh_dir("compare_self");
  const auto dir = execute_run(tiny_ks(base / "run", 0));
  const auto rows =
      execute_compare(dir.string(), dir.string(), 3.0, (base / "metrics.csv").string());
  REQUIRE_FALSE(rows.empty());
  bool saw_rel = false, saw_hs = false;
  for (const auto& row : rows) {
    CHECK(row.value == 0.0);
    saw_rel |= row.metric.rfind("rel_l2", 0) == 0;
    saw_hs |= row.metric.rfind("h_minus_s", 0) == 0;
  }
  CHECK(saw_rel);
  CHECK(saw_hs);
  CHECK(fs::exists(base / "metrics.csv"));
}

TEST_CASE("compare rejects mismatched snapshot schedules") {
  const auto base = fresh_dir("compare_mismatch");
  auto inv_a = tiny_ks(base / "a", 0);
  auto inv_b = tiny_ks(base / "b", 0);
  inv_b.t_end = 4e-3;  // different schedule
  const auto da = execute_run(inv_a);
  const auto db = execute_run(inv_b);
  CHECK_THROWS_AS(execute_compare(da.string(), db.string(), std::nullopt), ConfigError);
}

TEST_CASE("fd run writes the shared artifact shapes") {
  const auto base = fresh_dir("fd_run");
  RunInvocation inv;
  inv.command = "run-fd";
  inv.preset = "ks-linear";
  inv.out_dir = (base / "out").string();
  inv.t_end = 2e-3;
  inv.grid = 24;
  inv.modes = 4;
  const auto dir = execute_run(inv);
  const auto record = read_run_json((dir / "run.json").string());
  CHECK(record.command == "run-fd");
  REQUIRE_FALSE(record.snapshots.empty());
  CHECK(fs::exists(dir / record.snapshots.front().files.at("u_grid")));
  CHECK(fs::exists(dir / record.snapshots.front().files.at("u_coef")));
  const auto grid = read_grid_csv((dir / record.snapshots.front().files.at("u_grid")).string(), 2);
  CHECK(grid.n == 24);
}

TEST_CASE("convergence study: cached reference, csv report, deterministic rerun") {
  const auto base = fresh_dir("convergence");
  const auto cfg_path = base / "study.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"preset": "ks-linear", "sweep": [300, 600], "n_ref": 1200,)"
        << R"( "seeds": [1, 2], "ref_seed": 99, "tau": 1e-3, "t_end": 4e-3,)"
        << R"( "modes": 4, "grid": 16})";
  }
  const auto report = execute_convergence(cfg_path.string(), (base / "out").string());
  CHECK(report.errors.size() == 4);
  for (const auto& [n, seed, err] : report.errors) CHECK(err > 0.0);
  CHECK(fs::exists(report.csv_path));
  CHECK(fs::exists(base / "out" / "reference" / "final_u.coef"));
  const auto again = execute_convergence(cfg_path.string(), (base / "out").string());
  CHECK(again.fit.slope == report.fit.slope);  // cached reference, same errors
  for (std::size_t i = 0; i < report.errors.size(); ++i)
    CHECK(std::get<2>(again.errors[i]) == std::get<2>(report.errors[i]));
}

TEST_CASE("convergence study input validation") {
  const auto base = fresh_dir("convergence_bad");
  const auto cfg_path = base / "study.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"preset": "ks-linear", "sweep": [300], "n_ref": 1200, "seeds": [1, 2, 3]})";
  }
  CHECK_THROWS_AS(execute_convergence(cfg_path.string(), (base / "out").string()),
                  ConfigError);
}
