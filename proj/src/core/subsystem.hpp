#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "core/evolution.hpp"
#include "core/trajectories.hpp"

namespace paleo {

/// Slice psi(., q_E, t) of a two-axis wave field. Axis 0 is the subsystem,
/// axis 1 the environment.
struct ConditionalWave {
  Grid grid;  // the q_S line
  double time = 0.0;
  double environment_position = 0.0;
  ComplexField values;      // raw slice, linear in q_E between rows
  ComplexField normalized;  // values / norm_factor
  double norm_factor = 0.0;
  RealField rho;       // |values|^2
  RealField velocity;  // q_S component of v from the normalized slice
  /// max |rho - slice of rho| and max |velocity - slice of v_S| over nodes
  /// where both flows are unmasked and rho carries 1e-6 of its maximum.
  double rho_reduction_residual = 0.0;
  double velocity_reduction_residual = 0.0;
};

/// One conditional wave per snapshot of run; qE_path holds q_E at each snapshot.
/// Throws out_of_domain for a path point outside a dirichlet grid.
std::vector<ConditionalWave> conditional_wave(const Run& run, std::span<const double> qE_path);
/// Environment path taken from axis 1 of walker w.
std::vector<ConditionalWave> conditional_wave(const Run& run, const TrajectorySet& traj, std::size_t walker);
ConditionalWave conditional_slice(const WaveField& psi, double qE, const MassMatrix& mass, double hbar);

enum class EnvironmentSource { bohmian_walker, prescribed_path };

struct BipartiteScenario {
  Grid grid;
  WaveField psi0;
  PotentialSpec potential = PotentialSpec::free_particle();
  /// g q_S q_E, active inside its window. Replaces the coupling in the run config.
  Coupling coupling;
  EnvironmentSource environment = EnvironmentSource::bohmian_walker;
  std::vector<double> prescribed_path;  // q_E per snapshot
  /// Subsystem branch states on the q_S line, and the initial pointer width
  /// (rho of the pointer ∝ exp(-q^2 / w^2)).
  std::array<WaveField, 2> branches;
  double pointer_width = 1.0;
};

/// psi0 = (a1 phi1 + a2 phi2) chi0 with Gaussian phi_i centered at -/+ offset
/// on axis 0 and a pointer chi0 at the origin of axis 1. The amplitudes are
/// normalized; a zero amplitude is allowed.
BipartiteScenario von_neumann_scenario(const Grid& grid, Complex a1, Complex a2, double offset, double branch_width,
                                       double pointer_width, const Coupling& coupling, double hbar = 1.0);

struct MeasurementOptions {
  std::size_t walker_count = 1;
  std::uint64_t seed = 1;
  /// Separation, in pointer widths, that counts as a completed measurement.
  double separation_required = 6.0;
  BohmianOptions bohmian;
};

struct MeasurementReport {
  std::vector<double> times;
  /// Walker 0: share of the normalized conditional wave on each branch's side
  /// of the midpoint between the branch centers.
  std::vector<std::array<double, 2>> branch_weights;
  /// |<psi^S normalized | phi_other>|^2 for walker 0 at every snapshot.
  std::vector<double> residual_series;
  /// Distance between the pointer centers of the two branches over the
  /// larger pointer width. Infinite while one side holds under 1e-6 of the density.
  std::vector<double> pointer_separation;
  int selected_branch = 0;  // 0 or 1
  double residual_other_branch = 0.0;
  bool inconclusive = false;
  std::vector<int> walker_branches;
  std::array<double, 2> branch_frequency{0.0, 0.0};
  std::vector<ConditionalWave> conditional;  // walker 0
  Run run;
  TrajectorySet walkers;  // empty for a prescribed path
};

/// Evolves the scenario with cfg (engine and integrator as configured, the
/// coupling taken from the scenario), guides walkers with the Bohmian flow
/// from rho0 samples (or follows the prescribed path), and reads the branch
/// each one selects at t_final.
MeasurementReport run_measurement(const BipartiteScenario& scenario, const EvolutionConfig& cfg,
                                  const MeasurementOptions& opts = {});

struct ProductRuleReport {
  /// max over steps of ||psi_joint - psi1 (x) psi2|| / ||psi_joint||
  double deviation = 0.0;
  /// At every snapshot: max |rho - rho1 rho2| / max rho, and the largest
  /// difference between v_a of the joint flow and of factor a on the support.
  double rho_deviation = 0.0;
  double velocity_deviation = 0.0;
};

struct ProductRuleOptions {
  /// Lets a coupled config through, to watch the factorization fail.
  bool allow_interaction = false;
  double support_rel = 1e-6;
};

/// Evolves psi1 (x) psi2 under V1(q0) + V2(q1) on the plane spanned by the two
/// line grids, and each factor on its own line with the matching mass entry.
/// cfg.mass must be 2D. Throws contract for a coupled config.
ProductRuleReport product_rule_check(const WaveField& psi1, const WaveField& psi2, const PotentialSpec& V1,
                                     const PotentialSpec& V2, const EvolutionConfig& cfg,
                                     const ProductRuleOptions& opts = {});

/// H psi with the standard Laplacian stencil; the pre-Schrödinger generator
/// subtracts Q[|psi|^2] psi. Q is only dropped at exact zeros.
ComplexField apply_generator(Engine engine, const WaveField& psi, const PotentialSpec& V, const MassMatrix& mass,
                             double hbar);

/// ||Omega(psi1 (x) psi2) - [Omega1 psi1 (x) psi2 + psi1 (x) Omega2 psi2]|| in the
/// grid L2 norm, with Omega acting on the plane and Omega_a on the lines.
double splitting_check(Engine engine, const WaveField& psi1, const WaveField& psi2, const PotentialSpec& V1,
                       const PotentialSpec& V2, const MassMatrix& mass, double hbar);

/// V1(q0) + V2(q1) tabulated on the plane.
PotentialSpec separable_potential(const Grid& plane, const PotentialSpec& V1, const PotentialSpec& V2,
                                  const MassMatrix& mass);

}  // namespace paleo
