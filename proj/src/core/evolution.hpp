#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/fft.hpp"
#include "core/grid.hpp"
#include "core/potential.hpp"

namespace paleo {

enum class Engine { schrodinger, pre_schrodinger };
enum class Integrator { split_step, crank_nicolson };

const char* engine_name(Engine e) noexcept;
const char* integrator_name(Integrator i) noexcept;

/// Bilinear pointer coupling g * q0 * q1, switched on for t in [t_on, t_off).
struct Coupling {
  double g = 0.0;
  double t_on = 0.0;
  double t_off = 0.0;
  bool active(double t) const noexcept { return g != 0.0 && t >= t_on && t < t_off; }
};

struct EvolutionConfig {
  Engine engine = Engine::schrodinger;
  Integrator integrator = Integrator::split_step;
  double dt = 1e-3;
  double t_final = 1.0;
  double hbar = 1.0;
  MassMatrix mass;
  int snapshot_stride = 1;
  /// Multiplier on the -Q term of the pre-Schrödinger engine. 0 leaves only the linear part.
  double q_scale = 1.0;
  double eps_node_rel = 1e-12;
  /// Density (relative to max) above which a point counts as support when
  /// looking for zeros inside the support.
  double support_rel = 1e-6;
  Coupling coupling;
};

/// Stability limits checked before stepping.
inline constexpr double kMaxPotentialPhase = M_PI;  // dt * max|V| / hbar
inline constexpr double kMaxKineticPhase = 50.0;     // dt * hbar * max m * k_max^2 / 2

/// Throws config errors for inconsistent or unstable settings.
void validate_evolution(const Grid& grid, const PotentialSpec& V, const EvolutionConfig& cfg);

/// One-step propagator for a fixed grid, potential and configuration.
///
/// The potential (and for the pre-Schrödinger engine, -q_scale * Q[|psi|^2])
/// enters as a diagonal phase in a Strang splitting around the kinetic step.
/// The kinetic step is exact in Fourier space (split-step) or a Cayley factor
/// per axis (Crank-Nicolson; the 2D form is a product of 1D Cayley factors).
class Propagator {
 public:
  Propagator(const Grid& grid, const PotentialSpec& V, const EvolutionConfig& cfg);
  ~Propagator();
  Propagator(Propagator&&) noexcept;

  /// Advances values (at time t) by one dt in place.
  void advance(ComplexField& values, double t) const;
  WaveField step(const WaveField& psi) const;

  /// Q[|psi|^2]. Split-step: spectral, from the amplitude restricted to the
  /// lower half of each axis' spectrum. Crank-Nicolson: the same in a sine
  /// basis, with the Laplacian whose exponential is the Cayley factor.
  /// Points below eps_node_rel are 0. Throws pre_caustic if a zero lies inside the support.
  RealField quantum_potential_of(const ComplexField& values) const;
  /// <psi|H|psi> with the discrete kinetic operator of this integrator.
  double energy(const WaveField& psi, double t = 0.0) const;

  const Grid& grid() const noexcept { return grid_; }
  const EvolutionConfig& config() const noexcept { return cfg_; }
  const RealField& potential_field() const noexcept { return v_; }

 private:
  void potential_kick(ComplexField& values, double t_mid, double tau) const;
  void kinetic(ComplexField& values) const;
  void cayley_axis(ComplexField& values, int a) const;
  ComplexField apply_kinetic_operator(const ComplexField& values) const;
  void build_sine_filters(double cut);

  Grid grid_;
  EvolutionConfig cfg_;
  RealField v_;
  RealField coupling_;
  std::unique_ptr<Fft> fft_;
  std::unique_ptr<SineTransform> sine_;
  ComplexField kin_phase_;
  RealField amp_lowpass_;
  RealField amp_lap_;
  // Thomas-algorithm factors per axis for the constant Cayley systems.
  std::array<ComplexField, 2> cn_cprime_;
  std::array<ComplexField, 2> cn_denom_;
  std::array<Complex, 2> cn_alpha_{};
};

WaveField step_schrodinger(const WaveField& psi, const PotentialSpec& V, const EvolutionConfig& cfg);
WaveField step_pre_schrodinger(const WaveField& psi, const PotentialSpec& V, const EvolutionConfig& cfg);

/// Snapshots of one evolution, at t = 0 and every snapshot_stride steps.
struct Run {
  Grid grid;
  EvolutionConfig cfg;
  PotentialSpec potential;
  std::vector<WaveField> snapshots;
  bool stopped_early = false;
  std::string stop_reason;
  double max_norm_drift = 0.0;

  std::vector<double> times() const;
  double potential_at(const Point& q, double t) const;
  Point potential_gradient_at(const Point& q, double t) const;
};

/// Evolves psi0 to cfg.t_final. A pre-caustic violation ends the run early
/// (stopped_early, stop_reason) rather than propagating past it.
Run evolve(const WaveField& psi0, const PotentialSpec& V, const EvolutionConfig& cfg);

}  // namespace paleo
