#include "branchpde/run_record.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "branchpde/errors.hpp"

namespace branchpde {

std::string artifact_version() {
#ifdef BRANCHPDE_VERSION
  return BRANCHPDE_VERSION;
#else
  return "0.0.0-dev";
#endif
}

std::string format_g17(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "t,count_u,count_v,mass_u,mass_v,floor_hits,cap_hits\n";
  for (const auto& row : series) {
    out << format_g17(row.t) << ',' << row.count_u << ',' << row.count_v << ','
        << format_g17(row.mass_u) << ',' << format_g17(row.mass_v) << ',' << row.floor_hits
        << ',' << row.cap_hits << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<SeriesRow> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty series file: " + path);
  std::vector<SeriesRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SeriesRow row;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    if (!(ss >> row.t >> row.count_u >> row.count_v >> row.mass_u >> row.mass_v >>
          row.floor_hits >> row.cap_hits))
      throw IoError("bad series row in " + path + ": " + line);
    rows.push_back(row);
  }
  return rows;
}

void write_grid_csv(const std::string& path, const TorusDomain& domain, std::size_t n,
                    std::span<const double> values, bool recenter) {
  const int d = domain.dim();
  const auto pts = domain.uniform_grid(n);
  const std::size_t total = pts.size() / d;
  if (values.size() != total) throw std::invalid_argument("write_grid_csv: value count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  for (int j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "value\n";
  const double half = 0.5 * domain.length();
  // recentering relabels coordinates by half a period: the field value at x
  // is listed under wrap(x + half); values themselves are untouched.
  for (std::size_t p = 0; p < total; ++p) {
    for (int j = 0; j < d; ++j) {
      double coord = pts[p * d + j];
      if (recenter) coord = domain.wrap1(coord + half);
      out << format_g17(coord) << ',';
    }
    out << format_g17(values[p]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

GridField read_grid_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty grid csv: " + path);
  std::vector<double> values;
  double max_coord = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double v = 0.0, coord = 0.0;
    for (int j = 0; j < dim; ++j) {
      if (!(ss >> coord)) throw IoError("bad grid row in " + path);
      max_coord = std::max(max_coord, coord);
    }
    if (!(ss >> v)) throw IoError("bad grid row in " + path);
    values.push_back(v);
  }
  const auto total = values.size();
  auto n = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(total),
                                                          1.0 / dim)));
  while (n > 0 && std::pow(static_cast<double>(n), dim) > static_cast<double>(total)) --n;
  std::size_t check = 1;
  for (int j = 0; j < dim; ++j) check *= n;
  if (check != total) throw IoError("grid csv is not a full n^d grid: " + path);
  // infer the domain length from the lattice: h = L / n, max coord = L - h
  const double length = max_coord * static_cast<double>(n) / static_cast<double>(n - 1);
  GridField g(TorusDomain(dim, length), n);
  g.values = std::move(values);
  return g;
}

namespace {

nlohmann::json status_json(const RunStatus& status) {
  if (status.completed) return "completed";
  return nlohmann::json{{"failed", {{"step", status.failed_step}, {"reason", status.reason}}}};
}

RunStatus status_from_json(const nlohmann::json& j) {
  RunStatus s;
  if (j.is_string() && j.get<std::string>() == "completed") return s;
  s.completed = false;
  s.failed_step = j.at("failed").at("step").get<std::int64_t>();
  s.reason = j.at("failed").at("reason").get<std::string>();
  return s;
}

}  // namespace

void write_run_json(const std::string& path, const RunRecord& record) {
  nlohmann::json j;
  j["version"] = record.version;
  j["command"] = record.command;
  j["config"] = record.config_echo;
  j["seed"] = record.seed;
  j["config_hash"] = record.config_hash;
  j["status"] = status_json(record.status);
  j["series_file"] = "series.csv";
  j["snapshots"] = nlohmann::json::array();
  for (const auto& snap : record.snapshots)
    j["snapshots"].push_back({{"step", snap.step}, {"t", snap.t}, {"files", snap.files}});
  j["warnings"] = record.warnings;
  j["timings_sec"] = record.timings_sec;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_particle_csv(const std::string& path, const ParticleSet& particles) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  const int d = particles.dim();
  out << "id";
  for (int j = 0; j < d; ++j) out << ",x" << (j + 1);
  out << '\n';
  for (std::int64_t i = 0; i < particles.size(); ++i) {
    out << particles.lineage_id(i);
    for (int j = 0; j < d; ++j) out << ',' << format_g17(particles.position(i)[j]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

RunRecord read_run_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("bad run.json at " + path + ": " + e.what());
  }
  RunRecord record;
  record.version = j.value("version", "");
  record.command = j.value("command", "");
  record.config_echo = j.value("config", nlohmann::json::object());
  record.seed = j.value("seed", 0ULL);
  record.config_hash = j.value("config_hash", "");
  record.status = status_from_json(j.at("status"));
  for (const auto& snap : j.value("snapshots", nlohmann::json::array())) {
    RunRecord::SnapshotRef ref;
    ref.step = snap.at("step").get<std::int64_t>();
    ref.t = snap.at("t").get<double>();
    for (auto it = snap.at("files").begin(); it != snap.at("files").end(); ++it)
      ref.files[it.key()] = it.value().get<std::string>();
    record.snapshots.push_back(std::move(ref));
  }
  if (j.contains("warnings"))
    record.warnings = j["warnings"].get<std::vector<std::string>>();
  if (j.contains("timings_sec"))
    record.timings_sec = j["timings_sec"].get<std::map<std::string, double>>();
  return record;
}

}  // namespace branchpde
