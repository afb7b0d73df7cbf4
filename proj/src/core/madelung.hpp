#pragma once

#include <span>

#include "core/grid.hpp"
#include "core/operators.hpp"

namespace paleo {

/// Default node threshold, relative to max rho.
inline constexpr double kDefaultNodeEps = 1e-12;

/// Madelung variables extracted from one wave-field snapshot.
///
/// `v` is the average (current) velocity m^{ij} d_j S, `u` the osmotic velocity
/// (hbar/2) m^{ij} d_j ln rho. At masked nodes (rho < eps_node) both are stored
/// as zero and carry no meaning; `q_pot` holds NaN there.
struct FlowField {
  Grid grid;
  MassMatrix mass;
  double hbar = 1.0;
  double time = 0.0;
  double eps_node = 0.0;  // absolute threshold actually applied
  RealField rho;
  VectorField<double> v;
  VectorField<double> u;
  RealField q_pot;
  MaskField node_mask;

  bool masked(std::size_t k) const { return node_mask[k] != 0; }
  double max_rho() const;
  /// True when any corner of the cell holding p is a masked node.
  bool near_node(const Point& p) const;
  /// Velocity (v) at an off-grid point, multilinear in space.
  Point velocity_at(const Point& p) const;
  Point osmotic_at(const Point& p) const;
};

struct PolarOptions {
  double eps_node_rel = kDefaultNodeEps;
  /// Allowed |‖psi‖ - 1| before the input is rejected as unnormalized.
  double norm_tolerance = 1e-6;
};

/// rho = |psi|^2, v = hbar m Im(d ln psi), u = (hbar/2) m d rho / rho, Q[rho].
///
/// Im(d ln psi) is taken from central differences of the complex logarithm of
/// the neighbour ratios psi(x±h)/psi(x); the principal branch is local to one
/// cell so no global phase unwrapping is involved.
FlowField polar_decompose(const WaveField& psi, const MassMatrix& mass, double hbar,
                          const PolarOptions& opts = {});

/// Q = -(hbar^2/2) (m^{ii} d_i d_i sqrt(rho)) / sqrt(rho), standard stencil.
/// Nodes where rho < eps_node carry NaN.
RealField quantum_potential(const RealField& rho, const Grid& grid, const MassMatrix& mass,
                            double hbar, double eps_node_rel = kDefaultNodeEps);

/// max |Q rho - (rho |u|^2/2 - (hbar^2/4) Laplacian rho)| over unmasked nodes.
double densitized_q_identity_residual(const FlowField& flow);

/// Trapezoid line integral of the covector m_ij v^j along a polyline.
/// With `closed` the last vertex is joined back to the first. Throws
/// node_encounter if any vertex sits in a cell touching a masked node.
double phase_line_integral(const FlowField& flow, std::span<const Point> path, bool closed = false);

/// Nodes that are unmasked and carry at least floor_rel * max(rho).
MaskField evaluation_support(const FlowField& flow, double floor_rel);

/// Discrete curl of the covector m_ij v^j in 2D; zero on masked nodes and
/// on nodes whose stencil touches a masked node.
RealField flow_curl(const FlowField& flow);

}  // namespace paleo
