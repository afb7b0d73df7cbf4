#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/madelung.hpp"
#include "core/potential.hpp"

namespace paleo {

/// psi = (x + i y)^m exp(-r^2 / (2 w^2)), normalized; negative m uses (x - i y)^|m|.
/// The grid must be 2D and centered on the origin.
WaveField make_vortex(int m, double envelope_width, const Grid& grid);

struct NodeSearchOptions {
  int max_iterations = 50;
  /// Newton stops once the step is below this fraction of the spacing.
  double step_tolerance = 1e-4;
  /// Cells whose four corners are all below this * max rho are skipped.
  double eps_node_rel = kDefaultNodeEps;
};

struct NodeCandidate {
  Point location{0.0, 0.0};
  bool converged = true;  // false marks an inconclusive candidate
};

/// Cells where both Re psi and Im psi change sign seed a root of the bilinear
/// interpolant, which is then polished by Newton on the bicubic interpolant.
/// Roots within h of each other are merged. Periodic seam cells are skipped.
std::vector<NodeCandidate> find_nodes(const WaveField& psi, const NodeSearchOptions& opts = {});

struct CirculationOptions {
  int points = 256;  // vertices per circle
  double quantized_tolerance = 1e-3;
};

struct Circulation {
  double circulation = 0.0;  // mean over the radii that were used
  double winding_estimate = 0.0;
  int nearest_integer_m = 0;
  double quantization_residual = 0.0;
  bool quantized = false;
  std::vector<double> radii;     // radii actually integrated
  std::vector<double> windings;  // winding per used radius
  std::vector<std::string> notes;
};

/// Line integral of m_ij v^j around circles centered on the node, divided by
/// 2 pi hbar. Circles that touch the node mask are skipped with a note.
Circulation circulation_quantization(const FlowField& flow, const Point& node, std::span<const double> radii,
                                     const CirculationOptions& opts = {});

struct ExponentOptions {
  int ring_points = 256;
  /// Fit log rho = alpha log r + c + beta r^2, which absorbs a smooth envelope.
  bool envelope_term = true;
};

struct ExponentFit {
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  int rings = 0;
};

/// Least-squares exponent of the ring-averaged density around the node.
/// Rings are spaced by the grid step; fewer than 5 is insufficient data.
ExponentFit fit_density_exponent(const RealField& rho, const Grid& grid, const Point& node, double r_lo, double r_hi,
                                 const ExponentOptions& opts = {});
ExponentFit fit_density_exponent(const FlowField& flow, const Point& node, double r_lo, double r_hi,
                                 const ExponentOptions& opts = {});

enum class Verdict { satisfied, violated_zero, violated_infinite, inconclusive };
const char* verdict_name(Verdict v) noexcept;

struct RegularityOptions {
  /// Verdict window (lo_scale, hi_scale) * max rho / w^2.
  double lo_scale = 1e-6;
  double hi_scale = 1e6;
  /// w above; 0 uses the rms distance of rho from the node.
  double length_scale = 0.0;
  /// Smallest ring radius; 0 uses twice the grid step. Rings at r, 2r, 4r.
  double radius = 0.0;
  int ring_points = 256;
  /// An extrapolated limit below this fraction of the largest ring value is zero.
  double zero_tolerance = 1e-2;
};

struct Regularity {
  double delta_rho = 0.0;  // extrapolated; +inf when the ring values diverge
  double order = 0.0;      // fitted exponent p in L(r) = D + a r^p
  std::array<double, 3> ring_laplacian{};  // L at r, 2r, 4r
  double lo = 0.0;
  double hi = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// L(r) = 4 (mean of rho on the m-ellipse of radius r - rho(node)) / r^2 tends
/// to the mass Laplacian of rho at the node. The limit is extrapolated from
/// three radii with a fitted order. Growth as r shrinks means no finite limit.
Regularity regularity_check(const RealField& rho, const Grid& grid, const Point& node, const MassMatrix& mass,
                            const RegularityOptions& opts = {});
Regularity regularity_check(const FlowField& flow, const Point& node, const RegularityOptions& opts = {});

struct NodeAnalysis {
  Point node_location{0.0, 0.0};
  bool located = true;
  Circulation circulation;
  ExponentFit exponent;
  Regularity regularity;
};

struct NodeAnalysisOptions {
  std::vector<double> radii;  // empty: 8h, 16h, 32h
  double r_lo = 0.0;          // exponent window; 0 picks 2h .. 12h
  double r_hi = 0.0;
  CirculationOptions circulation;
  ExponentOptions exponent;
  RegularityOptions regularity;
};

/// All node checks for every node of psi.
std::vector<NodeAnalysis> analyze_nodes(const WaveField& psi, const MassMatrix& mass, double hbar,
                                        const NodeAnalysisOptions& opts = {});

/// Pointwise rho |v|^2_m / 2 + rho |u|^2_m / 2 + (V - E) rho - (hbar^2/4) Laplacian rho.
/// NaN where the stencil touches the node mask.
RealField stationary_energy_balance_field(const FlowField& flow, const PotentialSpec& V, double energy);
/// Max-norm of the field above. Difference errors in v and u scale as
/// h^2 / r^2 at distance r from a zero, so this does not converge next to nodes.
double stationary_energy_balance_residual(const FlowField& flow, const PotentialSpec& V, double energy);

}  // namespace paleo
