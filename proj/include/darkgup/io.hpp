#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "darkgup/modes.hpp"
#include "darkgup/sde.hpp"

// Columnar binary containers (little-endian f64) and CSV export.
//
// Layout: magic[4] | u32 version | u64 seed | u32 n_header |
//         n_header x (u16 len, name bytes, f64 value) |
//         u64 n_rows | u32 n_cols | n_cols x (u16 len, name bytes) |
//         n_cols x n_rows f64 (column-major)

namespace darkgup {

struct ColumnarContainer {
  std::string magic;  // "OMG1" trajectories, "OMG2" slow amplitudes
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> header;
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> columns;

  double header_value(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
};

void write_container(const std::string& path, const ColumnarContainer& c);
ColumnarContainer read_container(const std::string& path);

void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

void write_slow_amplitudes(const std::string& path, const SlowAmplitudeSeries& s);
SlowAmplitudeSeries read_slow_amplitudes(const std::string& path);

/// Columns t, Re/Im of a, b1, b2.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Columns t, Re/Im and modulus of Ab, Ad.
void write_slow_amplitudes_csv(const std::string& path, const SlowAmplitudeSeries& s);

/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace darkgup
