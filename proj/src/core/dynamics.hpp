#pragma once

#include <string>

#include "core/evolution.hpp"
#include "core/trajectories.hpp"

namespace paleo {

struct ClassicalOptions {
  double t0 = 0.0;
  /// Record every stride-th step (and the last one).
  int record_stride = 1;
  /// When set, the path stops at the last step inside this dirichlet box.
  const Grid* domain = nullptr;
};

struct ClassicalFlow {
  TrajectorySet path;
  std::vector<Point> momenta;  // at the recorded times
  double energy_drift = 0.0;   // max |E - E0| / max(|E0|, 1e-300)
};

/// Leapfrog (kick-drift-kick) for dq/dt = m p, dp/dt = -grad V.
ClassicalFlow classical_flow(const Point& q0, const Point& p0, const PotentialSpec& V, const MassMatrix& mass,
                             double t_final, double dt, const ClassicalOptions& opts = {});

struct CausticOptions {
  double j_min = 1e-3;
  double blowup_factor = 1e3;
  /// Characteristics start on nodes with rho0 >= support_rel * max rho0.
  double support_rel = 1e-6;
};

struct CausticReport {
  enum class Indicator { none, flow_map_jacobian, density_blowup };
  bool detected = false;
  double t_caustic = 0.0;
  Indicator indicator = Indicator::none;
  bool has_location = false;
  Point location{0.0, 0.0};
  double min_jacobian = 1.0;  // smallest value seen up to the detection (or the horizon)
};

const char* caustic_indicator_name(CausticReport::Indicator i) noexcept;

/// Flow-map Jacobian of a bundle of characteristics launched from the first
/// snapshot's velocity field, integrated to cfg.t_final, plus growth of the
/// density maximum across snapshots. The earlier indicator wins.
CausticReport detect_caustic(const Run& run, const CausticOptions& opts = {});

struct EquivalenceReport {
  double max_deviation = 0.0;
  double t_horizon = 0.0;
  std::size_t compared = 0;  // snapshot times compared
  Point p0{0.0, 0.0};
  CausticReport caustic;
  TrajectorySet guided;     // Bohmian path on the pre-Schrödinger run
  TrajectorySet classical;  // Hamiltonian path at the same times
};

/// Runs the pre-Schrödinger engine from psi0, follows q0 along its velocity
/// field, and compares with the Hamiltonian path from (q0, grad S(q0)) up to
/// the caustic horizon.
EquivalenceReport equivalence_check(const WaveField& psi0, const Point& q0, const PotentialSpec& V,
                                    const EvolutionConfig& cfg, const CausticOptions& copts = {});
/// Same, on an existing pre-Schrödinger run.
EquivalenceReport equivalence_check(const Run& run, const Point& q0, const CausticOptions& copts = {});

struct ActionOptions {
  /// Leapfrog steps; 0 picks ceil((t1 - t0) / 1e-4), at least 1000.
  int steps = 0;
  int max_iterations = 50;
  double tolerance = 1e-10;
  /// Offset for the finite-difference Hamilton-Jacobi check; 0 skips it.
  double hj_delta = 1e-3;
};

struct ActionResult {
  double action = 0.0;
  Point p0{0.0, 0.0};
  int iterations = 0;
  double hj_residual = 0.0;  // |dS/dt1 + (1/2) m (dS/dq1)^2 + V(q1)|
};

/// S = integral of (1/2) p m p - V along the classical path from (q0, t0) to
/// (q1, t1), found by damped Newton shooting on p0.
ActionResult two_point_action(const Point& q0, double t0, const Point& q1, double t1, const PotentialSpec& V,
                              const MassMatrix& mass, const ActionOptions& opts = {});

enum class HjMode { classical_hj, quantum_hj, continuity };
const char* hj_mode_name(HjMode m) noexcept;

struct HjResidual {
  double value = 0.0;
  bool q_included = false;
  std::string note;  // set when the mode does not match the engine of the run
};

/// Max-norm residual over supported nodes, with time derivatives from
/// consecutive snapshots and the spatial terms averaged over both ends.
///   continuity:   d_t rho + d_i (rho v^i)
///   quantum-hj:   d_t v + (v.grad) v + m grad(V + Q)
///   classical-hj: as quantum-hj; Q enters only for Schrödinger runs
HjResidual hj_residuals(const FlowSeries& series, HjMode mode, const ResidualOptions& opts = {});

}  // namespace paleo
