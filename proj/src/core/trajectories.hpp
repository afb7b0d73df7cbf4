#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/evolution.hpp"
#include "core/madelung.hpp"
#include "core/trajectory.hpp"

namespace paleo {

/// Flow fields of every snapshot of a run, with linear interpolation in time.
class FlowSeries {
 public:
  FlowSeries(const Run& run, const PolarOptions& opts = {});

  const Run& run() const noexcept { return *run_; }
  const std::vector<FlowField>& flows() const noexcept { return flows_; }
  const std::vector<double>& times() const noexcept { return times_; }
  double t_begin() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }

  /// Snapshot interval holding t and the weight of its right end.
  void bracket(double t, std::size_t& i, double& s) const;
  Point velocity(const Point& q, double t) const;
  /// b = v + u
  Point drift(const Point& q, double t) const;
  bool near_node(const Point& q, double t) const;

 private:
  const Run* run_;
  std::vector<FlowField> flows_;
  std::vector<double> times_;
};

/// Per-walker random stream: mt19937_64 seeded from splitmix64(seed, walker).
std::uint64_t walker_stream_seed(std::uint64_t seed, std::uint64_t walker) noexcept;

/// count points distributed as the multilinear interpolant of rho.
/// 1D: exact inverse CDF of the piecewise-linear density. 2D: rejection
/// with a uniform proposal over the box. Walker w uses its own stream.
std::vector<Point> sample_density(const RealField& rho, const Grid& grid, std::size_t count, std::uint64_t seed);

struct BohmianOptions {
  /// RK4 steps per snapshot interval; 0 uses the run's snapshot_stride.
  int substeps = 0;
  int max_halvings = 20;
};

/// RK4 on dq/dt = v(q, t). Output times are the run's snapshot times.
/// Positions on periodic axes are not wrapped, so paths stay continuous.
TrajectorySet integrate_bohmian(const FlowSeries& series, std::span<const Point> starts,
                                const BohmianOptions& opts = {});

/// b = v + u at every node; masked nodes get 0.
VectorField<double> drift_field(const FlowField& flow);

struct NelsonOptions {
  std::size_t walker_count = 10000;
  std::uint64_t seed = 1;
  double dt_sde = 0.0;  // 0 uses the run's dt
  /// Multiplier on the Wiener increments. 0 with drift = velocity gives
  /// deterministic Euler paths along v.
  double diffusion_scale = 1.0;
  enum class Drift { forward, velocity } drift = Drift::forward;
  /// Explicit start points; empty samples rho0.
  std::vector<Point> starts;
};

/// Euler-Maruyama on dq = b dt + dB, <dB^a dB^a> = hbar m^{aa} dt.
/// Walkers that leave a dirichlet box are reflected back and counted.
TrajectorySet integrate_nelson(const FlowSeries& series, const NelsonOptions& opts);

/// Draws n Wiener increments for one axis (variance hbar m^{aa} dt) from the
/// walker streams used by integrate_nelson, for checking the diffusion law.
std::vector<double> sample_increments(std::size_t n, double hbar, double inverse_mass, double dt, std::uint64_t seed);

struct EnsembleStats {
  double time = 0.0;
  std::vector<double> edges;      // bin edges along axis 0 (1D) or per axis, flattened
  std::vector<double> histogram;  // walker fractions, sums to 1
  std::vector<double> expected;   // |psi|^2 mass per bin, sums to 1
  double l1_distance_to_rho = 0.0;
  double kde_bandwidth = 0.0;
};

struct EquivarianceOptions {
  /// Bin width as a fraction of the ensemble standard deviation per axis.
  double bin_width_sigma = 0.5;
  /// Snapshot indices to check; empty checks every snapshot.
  std::vector<std::size_t> checkpoints;
};

std::vector<EnsembleStats> equivariance_test(const TrajectorySet& traj, const Run& run,
                                             const EquivarianceOptions& opts = {});

struct FokkerPlanckOptions {
  /// Kernel width; 0 applies the normal-reference rule for second
  /// derivatives, 0.94 sigma n_ref^{-1/9}.
  double bandwidth = 0.0;
  /// The rule uses a fixed reference count so the width does not shrink
  /// with N and the residual keeps its 1/sqrt(N) noise scaling.
  double n_ref = 1e4;
  int points = 64;          // verification nodes per axis
  double floor_rel = 0.05;  // skip nodes where the estimate is below this * max
  /// Number of consecutive snapshot pairs to use; 0 uses all.
  std::size_t pairs = 0;
  /// Multiplier on the diffusion term, and a switch that drops the drift,
  /// for checking static ensembles.
  double diffusion_scale = 1.0;
  bool zero_drift = false;
};

struct FokkerPlanckResult {
  double residual = 0.0;
  double bandwidth = 0.0;
  std::size_t evaluated_nodes = 0;
};

/// max |d_t rho + d_i J^i - (hbar/2) m^{ii} d_i^2 rho| on a coarse grid, where
/// rho and the flux J = rho b are Gaussian kernel estimates from the walkers.
FokkerPlanckResult fokker_planck_residual(const TrajectorySet& traj, const FlowSeries& series,
                                          const FokkerPlanckOptions& opts = {});

struct ResidualOptions {
  /// Only nodes with rho >= floor_rel * max rho count.
  double floor_rel = 1e-6;
};

/// max |a^i + m^{ii} d_i V| with a = d_t v + (v.grad) v + m d Q, the time
/// derivative taken centrally over three consecutive snapshots.
double mean_acceleration_residual(const FlowSeries& series, const ResidualOptions& opts = {});

}  // namespace paleo
