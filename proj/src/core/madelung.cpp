#include "core/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paleo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// d ln psi / d x_a at node k from local complex-log ratios; only the
// imaginary part is used. Returns false when
// a needed neighbour is exactly zero.
bool log_derivative(const ComplexField& psi, const Grid& grid, std::size_t k, int a, Complex& out) {
  const double h = grid.h(a);
  const Complex c = psi[k];
  auto ratio_log = [&](long idx, Complex& l) {
    if (idx < 0 || psi[idx] == Complex{}) return false;
    l = std::log(psi[idx] / c);
    return std::isfinite(l.real()) && std::isfinite(l.imag());
  };
  const long m1 = grid.neighbour(k, a, -1), p1 = grid.neighbour(k, a, +1);
  Complex lp, lm, l2;
  if (ratio_log(p1, lp) && ratio_log(m1, lm)) {
    out = (lp - lm) / (2.0 * h);
    return true;
  }
  if (ratio_log(p1, lp) && ratio_log(grid.neighbour(k, a, +2), l2)) {
    out = (4.0 * lp - l2) / (2.0 * h);
    return true;
  }
  if (ratio_log(m1, lm) && ratio_log(grid.neighbour(k, a, -2), l2)) {
    out = -(4.0 * lm - l2) / (2.0 * h);
    return true;
  }
  return false;
}

}  // namespace

double FlowField::max_rho() const {
  return rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
}

bool FlowField::near_node(const Point& p) const {
  const Stencil s = multilinear_stencil(grid, locate(grid, p));
  for (int c = 0; c < s.count; ++c)
    if (node_mask[s.nodes[c]]) return true;
  return false;
}

Point FlowField::velocity_at(const Point& p) const {
  const Stencil s = multilinear_stencil(grid, locate(grid, p));
  Point out{0.0, 0.0};
  for (int a = 0; a < grid.dim(); ++a)
    for (int c = 0; c < s.count; ++c) out[a] += s.weights[c] * v[a][s.nodes[c]];
  return out;
}

Point FlowField::osmotic_at(const Point& p) const {
  const Stencil s = multilinear_stencil(grid, locate(grid, p));
  Point out{0.0, 0.0};
  for (int a = 0; a < grid.dim(); ++a)
    for (int c = 0; c < s.count; ++c) out[a] += s.weights[c] * u[a][s.nodes[c]];
  return out;
}

RealField quantum_potential(const RealField& rho, const Grid& grid, const MassMatrix& mass, double hbar,
                            double eps_node_rel) {
  detail::check_field(rho.size(), grid);
  detail::check_mass(grid, mass);
  require(hbar > 0.0, ErrorCode::invalid_argument, "hbar must be positive");
  double rmax = 0.0;
  RealField amp(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    require(rho[k] >= 0.0, ErrorCode::contract, "density must be non-negative");
    amp[k] = std::sqrt(rho[k]);
    rmax = std::max(rmax, rho[k]);
  }
  const double eps = eps_node_rel * rmax;
  const RealField lap = laplacian(amp, grid, mass);
  RealField q(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k)
    q[k] = (rho[k] < eps || rho[k] == 0.0) ? kNaN : -0.5 * hbar * hbar * lap[k] / amp[k];
  return q;
}

FlowField polar_decompose(const WaveField& psi, const MassMatrix& mass, double hbar, const PolarOptions& opts) {
  const Grid& grid = psi.grid;
  detail::check_field(psi.values.size(), grid);
  detail::check_mass(grid, mass);
  require(hbar > 0.0, ErrorCode::invalid_argument, "hbar must be positive");
  require(opts.eps_node_rel > 0.0, ErrorCode::invalid_argument, "eps_node must be positive");
  const double nrm = psi.norm();
  require(std::abs(nrm - 1.0) <= opts.norm_tolerance, ErrorCode::contract,
          "polar_decompose expects a normalized wave field (norm " + std::to_string(nrm) + ")");

  FlowField f;
  f.grid = grid;
  f.mass = mass;
  f.hbar = hbar;
  f.time = psi.time;
  f.rho = psi.density();
  f.eps_node = opts.eps_node_rel * f.max_rho();
  const std::size_t n = grid.size();
  f.node_mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    if (f.rho[k] < f.eps_node || f.rho[k] == 0.0) f.node_mask[k] = 1;

  f.v.assign(grid.dim(), RealField(n, 0.0));
  f.u.assign(grid.dim(), RealField(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    if (f.node_mask[k]) continue;
    for (int a = 0; a < grid.dim(); ++a) {
      Complex d;
      if (!log_derivative(psi.values, grid, k, a, d)) {
        f.node_mask[k] = 1;
        for (int b = 0; b < grid.dim(); ++b) f.v[b][k] = 0.0;
        break;
      }
      f.v[a][k] = hbar * mass.inverse(a) * d.imag();
    }
  }
  // u from the density stencil: stays second order next to simple zeros,
  // where ln|psi| is far from polynomial.
  for (int a = 0; a < grid.dim(); ++a) {
    const double c = 0.5 * hbar * mass.inverse(a);
    for (std::size_t k = 0; k < n; ++k)
      if (!f.node_mask[k]) f.u[a][k] = c * partial_at(f.rho, grid, k, a) / f.rho[k];
  }
  f.q_pot = quantum_potential(f.rho, grid, mass, hbar, opts.eps_node_rel);
  for (std::size_t k = 0; k < n; ++k)
    if (f.node_mask[k]) f.q_pot[k] = kNaN;
  return f;
}

double densitized_q_identity_residual(const FlowField& flow) {
  const RealField lap = laplacian(flow.rho, flow.grid, flow.mass);
  const double hb2 = flow.hbar * flow.hbar;
  double worst = 0.0;
  for (std::size_t k = 0; k < flow.rho.size(); ++k) {
    if (flow.masked(k)) continue;
    double u2 = 0.0;
    for (int a = 0; a < flow.grid.dim(); ++a) u2 += flow.u[a][k] * flow.u[a][k] * flow.mass.mass(a);
    const double lhs = flow.q_pot[k] * flow.rho[k];
    const double rhs = 0.5 * flow.rho[k] * u2 - 0.25 * hb2 * lap[k];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double phase_line_integral(const FlowField& flow, std::span<const Point> path, bool closed) {
  require(path.size() >= 2, ErrorCode::invalid_argument, "line integral needs at least two vertices");
  const int dim = flow.grid.dim();
  std::vector<Point> p(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (flow.near_node(path[i]))
      fail(ErrorCode::node_encounter, "line-integral path passes within one cell of a node");
    const Point vel = flow.velocity_at(path[i]);
    for (int a = 0; a < dim; ++a) p[i][a] = vel[a] * flow.mass.mass(a);  // lower the index
  }
  double acc = 0.0;
  const std::size_t segs = closed ? path.size() : path.size() - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t t = (s + 1) % path.size();
    for (int a = 0; a < dim; ++a) acc += 0.5 * (p[s][a] + p[t][a]) * (path[t][a] - path[s][a]);
  }
  return acc;
}

MaskField evaluation_support(const FlowField& flow, double floor_rel) {
  const double floor_abs = floor_rel * flow.max_rho();
  MaskField keep(flow.rho.size(), 0);
  for (std::size_t k = 0; k < keep.size(); ++k)
    keep[k] = (!flow.masked(k) && flow.rho[k] >= floor_abs) ? 1 : 0;
  return keep;
}

RealField flow_curl(const FlowField& flow) {
  require(flow.grid.dim() == 2, ErrorCode::structural, "curl needs a 2D flow");
  const Grid& g = flow.grid;
  RealField curl(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (flow.masked(k)) continue;
    bool clean = true;
    for (int a = 0; a < 2 && clean; ++a)
      for (int off : {-1, 1}) {
        const long nb = g.neighbour(k, a, off);
        if (nb < 0 || flow.masked(nb)) clean = false;
      }
    if (!clean) continue;
    curl[k] = flow.mass.mass(1) * partial_at(flow.v[1], g, k, 0) -
              flow.mass.mass(0) * partial_at(flow.v[0], g, k, 1);
  }
  return curl;
}

}  // namespace paleo
