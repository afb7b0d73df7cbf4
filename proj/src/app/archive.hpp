#pragma once

#include <string>
#include <vector>

#include "app/scenario.hpp"

namespace paleo::app {

/// Run archive layout, one directory per scenario:
///   manifest.txt      effective config, loadable as a scenario; format, version,
///                     seed, threads and sections in leading "# key = value" lines
///   snapshots.bin     see write_snapshots
///   trajectories.bin  see write_trajectories (only with walkers)
///   analyses.txt      key = value, one per line
///   summary.txt       status and check.<name>.{value,tolerance,relation,pass,note}
///   *.csv             mirrors of the binaries for small runs; measurement.csv
///                     and conditional.csv for measurement scenarios
/// No timestamps are written, so repeated runs give identical files.

inline constexpr std::size_t kCsvLimit = 200000;  // values per mirror

/// Little-endian. "PLSNAP01", u32 dim, u32 n0, u32 n1, f64 lo0, hi0, lo1, hi1,
/// u32 boundary (0 periodic, 1 dirichlet), u64 count, then per snapshot
/// f64 time and size() pairs of f64 (re, im) in grid order.
void write_snapshots(const std::string& path, const std::vector<WaveField>& snaps);
std::vector<WaveField> read_snapshots(const std::string& path);

/// Little-endian. "PLTRAJ01", u32 kind (0 classical, 1 bohmian, 2 nelsonian),
/// u32 dim, u64 walkers, u64 steps, u64 seed, f64 times[steps], then
/// f64 positions[walkers][steps][dim].
void write_trajectories(const std::string& path, const TrajectorySet& traj);
TrajectorySet read_trajectories(const std::string& path);

std::string summary_text(const Scenario& s, const Outcome& o);

/// Writes the archive under root/<name> and returns that directory.
std::string write_archive(const Scenario& s, const Outcome& o, const std::string& root, int threads);

}  // namespace paleo::app
