#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "branchpde/metrics.hpp"
#include "branchpde/run_record.hpp"
#include "branchpde/solver.hpp"

namespace branchpde {

/// CLI-facing invocation for run-scalar / run-ks / run-fd. File config first,
/// then flag overrides; every resolved value lands in the run record.
struct RunInvocation {
  std::string command;  // "run-scalar" | "run-ks" | "run-fd"
  std::string preset;
  std::string config_path;
  std::string out_dir;  // run directory; empty -> runs/<timestamp>-seed<seed>
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<double> t_end;
  std::optional<std::int64_t> n;
  std::optional<std::int64_t> n_u;
  std::optional<std::int64_t> n_v;
  std::optional<int> modes;
  std::optional<std::size_t> grid;
  std::optional<int> workers;
  std::optional<bool> recenter_plots;
  std::optional<bool> dump_particles;  // debug CSV of the final populations
};

/// Execute one run and persist run.json, series.csv and snapshots into the
/// run directory. Returns the directory; throws BlowupError after persisting
/// a partial record when the run failed.
std::filesystem::path execute_run(const RunInvocation& invocation);

/// Artifact writers shared with the acceptance suite (deterministic bytes).
void write_particle_artifacts(const std::filesystem::path& dir, const std::string& command,
                              const RunResult& result, RunRecord& record);
void write_fd_artifacts(const std::filesystem::path& dir, const FdRunResult& result,
                        bool recenter, RunRecord& record);

/// N-sweep convergence study (config file driven); emits convergence.csv and
/// returns the fitted log-log slope. The reference run is cached by config
/// hash and reused when it matches.
struct ConvergenceReport {
  SlopeFit fit;
  std::vector<std::tuple<std::int64_t, std::uint64_t, double>> errors;  // (N, seed, error)
  std::filesystem::path csv_path;
};
ConvergenceReport execute_convergence(const std::string& config_path, const std::string& out_dir);

/// Snapshot-by-snapshot comparison of two run directories; emits metrics.csv
/// in the current directory (or `out_csv` when given) and returns the rows.
struct CompareRow {
  std::string metric;
  double t = 0.0;
  double value = 0.0;
};
std::vector<CompareRow> execute_compare(const std::string& dir_a, const std::string& dir_b,
                                        std::optional<double> h_minus_s,
                                        const std::string& out_csv = "");

}  // namespace branchpde
