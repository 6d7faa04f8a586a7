#pragma once

#include <cstdint>
#include <string>

namespace branchpde {

/// One row of the per-step time series (series.csv schema).
struct SeriesRow {
  double t = 0.0;
  std::int64_t count_u = 0;
  std::int64_t count_v = 0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  std::int64_t floor_hits = 0;
  std::int64_t cap_hits = 0;
};

struct RunStatus {
  bool completed = true;
  std::int64_t failed_step = -1;
  std::string reason;
};

}  // namespace branchpde
