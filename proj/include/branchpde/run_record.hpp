#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "branchpde/fd_reference.hpp"
#include "branchpde/run_types.hpp"
#include "branchpde/solver.hpp"

namespace branchpde {

/// Everything a finished (or aborted) run leaves on disk, plus the in-memory
/// echo needed to reproduce it: replaying the echoed config and seed yields
/// byte-identical series and snapshots at any worker count.
struct RunRecord {
  std::string version;
  std::string command;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  std::string config_hash;
  RunStatus status;
  std::vector<SeriesRow> series;
  struct SnapshotRef {
    std::int64_t step = 0;
    double t = 0.0;
    std::map<std::string, std::string> files;  // e.g. "u_grid" -> "snap_0_u.csv"
  };
  std::vector<SnapshotRef> snapshots;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_sec;
};

std::string artifact_version();

/// %.17g rendering used for every emitted floating-point value.
std::string format_g17(double value);

/// Stable 64-bit FNV-1a of a string (config cache keys).
std::uint64_t fnv1a(const std::string& text);

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& series);
std::vector<SeriesRow> read_series_csv(const std::string& path);

/// Grid-sampled snapshot: CSV columns x1,..,xd,value over uniform_grid(n).
/// `recenter` shifts the plotted coordinates by half a period per axis.
void write_grid_csv(const std::string& path, const TorusDomain& domain, std::size_t n,
                    std::span<const double> values, bool recenter = false);
GridField read_grid_csv(const std::string& path, int dim);

void write_run_json(const std::string& path, const RunRecord& record);
RunRecord read_run_json(const std::string& path);

/// Debug dump: CSV "id,x1,...,xd", one row per particle.
void write_particle_csv(const std::string& path, const ParticleSet& particles);

}  // namespace branchpde
