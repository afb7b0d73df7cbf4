#include "core/wallstrom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "core/parallel.hpp"

namespace paleo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Keys cubic convolution kernel (a = -1/2); reproduces quadratics.
double keys(double x) {
  x = std::abs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

// Bicubic interpolation on a 2D grid. Falls back to bilinear when the 4x4
// stencil would leave a dirichlet box.
template <class T>
T cubic_at(const Field<T>& f, const Grid& g, const Point& p_in) {
  const Point p = g.wrap(p_in);
  std::array<int, 2> base{};
  std::array<double, 2> frac{};
  for (int a = 0; a < 2; ++a) {
    const double s = (p[a] - g.lo(a)) / g.h(a);
    base[a] = static_cast<int>(std::floor(s));
    frac[a] = s - base[a];
  }
  if (!g.periodic()) {
    for (int a = 0; a < 2; ++a)
      if (base[a] < 1 || base[a] + 2 > g.n(a) - 1) return interpolate(f, g, p);
  }
  auto idx = [&](int a, int i) { return g.periodic() ? ((i % g.n(a)) + g.n(a)) % g.n(a) : i; };
  T acc{};
  for (int dj = -1; dj <= 2; ++dj) {
    const double wy = keys(frac[1] - dj);
    const int j = idx(1, base[1] + dj);
    T row{};
    for (int di = -1; di <= 2; ++di) row += keys(frac[0] - di) * f[g.index(idx(0, base[0] + di), j)];
    acc += wy * row;
  }
  return acc;
}

Point ellipse_point(const Point& c, double r, double theta, const MassMatrix& mass) {
  return {c[0] + r * std::sqrt(mass.inverse(0)) * std::cos(theta), c[1] + r * std::sqrt(mass.inverse(1)) * std::sin(theta)};
}

double ring_mean(const RealField& rho, const Grid& g, const Point& c, double r, int points, const MassMatrix& mass) {
  double acc = 0.0;
  for (int k = 0; k < points; ++k) acc += cubic_at(rho, g, ellipse_point(c, r, kTwoPi * k / points, mass));
  return acc / points;
}

void require_plane(const Grid& g) { require(g.dim() == 2, ErrorCode::structural, "node analysis needs a 2D grid"); }

// Root of the bilinear interpolant in one cell, in cell coordinates.
bool bilinear_root(const std::array<Complex, 4>& c, double& s, double& t) {
  // psi(s,t) = c00 (1-s)(1-t) + c10 s (1-t) + c01 (1-s) t + c11 s t
  s = 0.5;
  t = 0.5;
  for (int it = 0; it < 40; ++it) {
    const Complex f = c[0] * (1 - s) * (1 - t) + c[1] * s * (1 - t) + c[2] * (1 - s) * t + c[3] * s * t;
    const Complex fs = (c[1] - c[0]) * (1 - t) + (c[3] - c[2]) * t;
    const Complex ft = (c[2] - c[0]) * (1 - s) + (c[3] - c[1]) * s;
    const double det = fs.real() * ft.imag() - ft.real() * fs.imag();
    if (det == 0.0 || !std::isfinite(det)) return false;
    const double ds = (f.real() * ft.imag() - ft.real() * f.imag()) / det;
    const double dt = (fs.real() * f.imag() - f.real() * fs.imag()) / det;
    s -= ds;
    t -= dt;
    if (std::abs(ds) + std::abs(dt) < 1e-12) return true;
  }
  return false;
}

}  // namespace

WaveField make_vortex(int m, double envelope_width, const Grid& grid) {
  require(m != 0, ErrorCode::invalid_argument, "a vortex needs m != 0");
  require(envelope_width > 0.0, ErrorCode::invalid_argument, "envelope width must be positive");
  require_plane(grid);
  for (int a = 0; a < 2; ++a) {
    const double mid = grid.periodic() ? grid.lo(a) + 0.5 * grid.n(a) * grid.h(a) : 0.5 * (grid.lo(a) + grid.hi(a));
    require(std::abs(mid) <= 1e-9 * grid.extent(a), ErrorCode::contract, "vortex grid must be centered on the origin");
  }
  ComplexField v(grid.size());
  const double w2 = envelope_width * envelope_width;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Point q = grid.point(k);
    const Complex z(q[0], m > 0 ? q[1] : -q[1]);
    v[k] = std::pow(z, std::abs(m)) * std::exp(-(q[0] * q[0] + q[1] * q[1]) / (2.0 * w2));
  }
  return WaveField(grid, std::move(v)).normalized();
}

std::vector<NodeCandidate> find_nodes(const WaveField& psi, const NodeSearchOptions& opts) {
  const Grid& g = psi.grid;
  require_plane(g);
  const ComplexField& f = psi.values;
  double rmax = 0.0;
  for (const Complex& z : f) rmax = std::max(rmax, std::norm(z));
  const double eps = opts.eps_node_rel * rmax;
  const double h = std::min(g.h(0), g.h(1));
  // Cells across the periodic seam are not scanned: states that do not fit
  // the box jump there and would seed spurious roots.
  const int ni = g.n(0) - 1;
  const int nj = g.n(1) - 1;

  std::vector<NodeCandidate> raw;
  for (int j = 0; j < nj; ++j)
    for (int i = 0; i < ni; ++i) {
      const std::array<Complex, 4> c{f[g.index(i, j)], f[g.index(i + 1, j)], f[g.index(i, j + 1)],
                                     f[g.index(i + 1, j + 1)]};
      bool all_masked = true;
      double re_lo = c[0].real(), re_hi = re_lo, im_lo = c[0].imag(), im_hi = im_lo;
      for (const Complex& z : c) {
        all_masked = all_masked && std::norm(z) < eps;
        re_lo = std::min(re_lo, z.real());
        re_hi = std::max(re_hi, z.real());
        im_lo = std::min(im_lo, z.imag());
        im_hi = std::max(im_hi, z.imag());
      }
      if (all_masked || re_lo > 0.0 || re_hi < 0.0 || im_lo > 0.0 || im_hi < 0.0) continue;
      double s, t;
      const bool ok = bilinear_root(c, s, t);
      if (ok && (s < -1e-9 || s > 1.0 + 1e-9 || t < -1e-9 || t > 1.0 + 1e-9)) continue;  // no zero in this cell
      NodeCandidate nc;
      nc.converged = ok;
      if (!ok) {
        s = 0.5;
        t = 0.5;
      }
      nc.location = {g.coord(0, i) + s * g.h(0), g.coord(1, j) + t * g.h(1)};
      raw.push_back(nc);
    }

  // Newton on the bicubic interpolant, Jacobian by central differences.
  for (NodeCandidate& nc : raw) {
    if (!nc.converged) continue;
    Point p = nc.location;
    const double d = 1e-3 * h;
    bool done = false;
    for (int it = 0; it < opts.max_iterations && !done; ++it) {
      if (!g.contains(p)) break;
      const Complex F = cubic_at(f, g, p);
      if (F == Complex{}) {
        done = true;
        break;
      }
      const Complex Fx = (cubic_at(f, g, {p[0] + d, p[1]}) - cubic_at(f, g, {p[0] - d, p[1]})) / (2.0 * d);
      const Complex Fy = (cubic_at(f, g, {p[0], p[1] + d}) - cubic_at(f, g, {p[0], p[1] - d})) / (2.0 * d);
      const double det = Fx.real() * Fy.imag() - Fy.real() * Fx.imag();
      if (det == 0.0 || !std::isfinite(det)) break;
      const double dx = (F.real() * Fy.imag() - Fy.real() * F.imag()) / det;
      const double dy = (Fx.real() * F.imag() - F.real() * Fx.imag()) / det;
      p[0] -= dx;
      p[1] -= dy;
      done = std::hypot(dx, dy) < opts.step_tolerance * h;
    }
    if (done && std::hypot(p[0] - nc.location[0], p[1] - nc.location[1]) <= 2.0 * h)
      nc.location = g.wrap(p);
    else
      nc.converged = false;
  }

  // A degenerate zero splits into a tight cluster of interpolant roots.
  // Converged roots within h of each other are merged into their centroid;
  // unconverged seeds next to a converged node are dropped.
  auto dist = [&](const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); };
  std::vector<std::vector<Point>> clusters;
  for (const NodeCandidate& nc : raw) {
    if (!nc.converged) continue;
    std::vector<std::size_t> hits;
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (const Point& p : clusters[c])
        if (dist(p, nc.location) <= h) {
          hits.push_back(c);
          break;
        }
    if (hits.empty()) {
      clusters.push_back({nc.location});
      continue;
    }
    clusters[hits[0]].push_back(nc.location);
    for (std::size_t k = hits.size(); k-- > 1;) {
      clusters[hits[0]].insert(clusters[hits[0]].end(), clusters[hits[k]].begin(), clusters[hits[k]].end());
      clusters.erase(clusters.begin() + static_cast<long>(hits[k]));
    }
  }
  std::vector<NodeCandidate> out;
  for (const auto& c : clusters) {
    Point m{0.0, 0.0};
    for (const Point& p : c) {
      m[0] += p[0] / static_cast<double>(c.size());
      m[1] += p[1] / static_cast<double>(c.size());
    }
    out.push_back({m, true});
  }
  const std::size_t located = out.size();
  for (const NodeCandidate& nc : raw) {
    if (nc.converged) continue;
    bool near = false;
    for (std::size_t k = 0; k < out.size() && !near; ++k)
      near = dist(out[k].location, nc.location) <= (k < located ? 3.0 * h : 0.5 * h);
    if (!near) out.push_back(nc);
  }
  return out;
}

Circulation circulation_quantization(const FlowField& flow, const Point& node, std::span<const double> radii,
                                     const CirculationOptions& opts) {
  require_plane(flow.grid);
  require(!radii.empty(), ErrorCode::invalid_argument, "no radii given");
  require(opts.points >= 8, ErrorCode::invalid_argument, "circle needs at least 8 points");
  Circulation out;
  std::vector<Point> path(opts.points);
  double sum = 0.0;
  for (double r : radii) {
    require(r > 0.0, ErrorCode::invalid_argument, "radius must be positive");
    for (int k = 0; k < opts.points; ++k) {
      const double th = kTwoPi * k / opts.points;
      path[k] = {node[0] + r * std::cos(th), node[1] + r * std::sin(th)};
    }
    std::ostringstream note;
    try {
      const double c = phase_line_integral(flow, path, true);
      out.radii.push_back(r);
      out.windings.push_back(c / (kTwoPi * flow.hbar));
      sum += c;
      continue;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::node_encounter && e.code() != ErrorCode::out_of_domain) throw;
      note << "radius " << r << " skipped: " << e.what();
    }
    out.notes.push_back(note.str());
  }
  require(!out.radii.empty(), ErrorCode::insufficient_data, "every circle touched the node mask");
  out.circulation = sum / static_cast<double>(out.radii.size());
  out.winding_estimate = out.circulation / (kTwoPi * flow.hbar);
  out.nearest_integer_m = static_cast<int>(std::lround(out.winding_estimate));
  out.quantization_residual = std::abs(out.winding_estimate - out.nearest_integer_m);
  out.quantized = out.quantization_residual <= opts.quantized_tolerance;
  return out;
}

ExponentFit fit_density_exponent(const RealField& rho, const Grid& grid, const Point& node, double r_lo, double r_hi,
                                 const ExponentOptions& opts) {
  require_plane(grid);
  detail::check_field(rho.size(), grid);
  const double h = std::min(grid.h(0), grid.h(1));
  require(r_lo > 0.0 && r_hi > r_lo, ErrorCode::invalid_argument, "need 0 < r_lo < r_hi");
  const int rings = static_cast<int>(std::floor((r_hi - r_lo) / h + 1e-9)) + 1;
  require(rings >= 5, ErrorCode::insufficient_data, "exponent window holds fewer than 5 rings");
  const int cols = opts.envelope_term ? 3 : 2;
  // Normal equations of the small least-squares problem.
  std::vector<double> xs(rings), ys(rings);
  const MassMatrix iso(2);
  for (int i = 0; i < rings; ++i) {
    const double r = r_lo + i * h;
    const double mean = ring_mean(rho, grid, node, r, opts.ring_points, iso);
    require(mean > 0.0, ErrorCode::contract, "ring-averaged density is not positive");
    xs[i] = r;
    ys[i] = std::log(mean);
  }
  auto basis = [&](double r, int c) { return c == 0 ? 1.0 : (c == 1 ? std::log(r) : r * r); };
  double A[3][3] = {}, b[3] = {};
  for (int i = 0; i < rings; ++i)
    for (int c = 0; c < cols; ++c) {
      b[c] += basis(xs[i], c) * ys[i];
      for (int d = 0; d < cols; ++d) A[c][d] += basis(xs[i], c) * basis(xs[i], d);
    }
  // Invert A (at most 3x3) by Gauss-Jordan.
  double inv[3][3] = {};
  for (int c = 0; c < cols; ++c) inv[c][c] = 1.0;
  for (int c = 0; c < cols; ++c) {
    int piv = c;
    for (int r = c + 1; r < cols; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = A[c][c];
    require(d != 0.0, ErrorCode::no_convergence, "exponent fit is degenerate");
    for (int k = 0; k < cols; ++k) {
      A[c][k] /= d;
      inv[c][k] /= d;
    }
    for (int r = 0; r < cols; ++r) {
      if (r == c) continue;
      const double m = A[r][c];
      for (int k = 0; k < cols; ++k) {
        A[r][k] -= m * A[c][k];
        inv[r][k] -= m * inv[c][k];
      }
    }
  }
  double coef[3] = {};
  for (int c = 0; c < cols; ++c)
    for (int d = 0; d < cols; ++d) coef[c] += inv[c][d] * b[d];
  double ss = 0.0;
  for (int i = 0; i < rings; ++i) {
    double fit = 0.0;
    for (int c = 0; c < cols; ++c) fit += coef[c] * basis(xs[i], c);
    ss += (ys[i] - fit) * (ys[i] - fit);
  }
  ExponentFit out;
  out.alpha = coef[1];
  out.rings = rings;
  const int dof = rings - cols;
  out.alpha_stderr = dof > 0 ? std::sqrt(ss / dof * inv[1][1]) : 0.0;
  return out;
}

ExponentFit fit_density_exponent(const FlowField& flow, const Point& node, double r_lo, double r_hi,
                                 const ExponentOptions& opts) {
  return fit_density_exponent(flow.rho, flow.grid, node, r_lo, r_hi, opts);
}

const char* verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated_zero: return "violated-zero";
    case Verdict::violated_infinite: return "violated-infinite";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

Regularity regularity_check(const RealField& rho, const Grid& grid, const Point& node, const MassMatrix& mass,
                            const RegularityOptions& opts) {
  require_plane(grid);
  detail::check_field(rho.size(), grid);
  detail::check_mass(grid, mass);
  require(opts.lo_scale > 0.0 && opts.hi_scale > opts.lo_scale, ErrorCode::invalid_argument,
          "regularity window needs 0 < lo < hi");

  double rmax = 0.0, mass_sum = 0.0, second = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    rmax = std::max(rmax, rho[k]);
    Point q = grid.point(k);
    double dx = q[0] - node[0], dy = q[1] - node[1];
    if (grid.periodic()) {
      dx -= grid.extent(0) * std::round(dx / grid.extent(0));
      dy -= grid.extent(1) * std::round(dy / grid.extent(1));
    }
    mass_sum += rho[k];
    second += rho[k] * (dx * dx + dy * dy);
  }
  require(rmax > 0.0, ErrorCode::contract, "density vanishes everywhere");
  const double w = opts.length_scale > 0.0 ? opts.length_scale : std::sqrt(second / mass_sum);
  Regularity out;
  out.lo = opts.lo_scale * rmax / (w * w);
  out.hi = opts.hi_scale * rmax / (w * w);

  const double r = opts.radius > 0.0 ? opts.radius : 2.0 * std::min(grid.h(0), grid.h(1));
  const double center = cubic_at(rho, grid, node);
  for (int i = 0; i < 3; ++i) {
    const double ri = r * (1 << i);
    out.ring_laplacian[i] = 4.0 * (ring_mean(rho, grid, node, ri, opts.ring_points, mass) - center) / (ri * ri);
  }
  const auto& L = out.ring_laplacian;
  const double d_small = L[1] - L[0];  // between r and 2r
  const double d_big = L[2] - L[1];    // between 2r and 4r
  const double scale = std::max({std::abs(L[0]), std::abs(L[1]), std::abs(L[2])});

  if (d_small == 0.0 && d_big == 0.0) {
    out.order = std::numeric_limits<double>::infinity();
    out.delta_rho = L[0];
  } else if (d_small == 0.0 || d_big / d_small <= 0.0) {
    out.verdict = Verdict::inconclusive;  // the ladder is not monotone
    out.delta_rho = L[0];
    return out;
  } else {
    out.order = std::log2(d_big / d_small);
    if (std::abs(out.order) < 0.1) {
      out.delta_rho = L[0];  // neither converging nor diverging at a rate we can read
      return out;
    }
    if (out.order < 0.0) {
      // L grows as the rings shrink: no finite limit
      out.delta_rho = std::copysign(std::numeric_limits<double>::infinity(), L[0]);
      if (L[0] > 0.0) out.verdict = Verdict::violated_infinite;
      return out;
    }
    out.delta_rho = L[0] - d_small / (std::exp2(out.order) - 1.0);
  }
  if (std::abs(out.delta_rho) <= opts.zero_tolerance * scale) out.delta_rho = 0.0;
  if (out.delta_rho <= out.lo)
    out.verdict = Verdict::violated_zero;
  else if (out.delta_rho >= out.hi)
    out.verdict = Verdict::violated_infinite;
  else
    out.verdict = Verdict::satisfied;
  return out;
}

Regularity regularity_check(const FlowField& flow, const Point& node, const RegularityOptions& opts) {
  return regularity_check(flow.rho, flow.grid, node, flow.mass, opts);
}

std::vector<NodeAnalysis> analyze_nodes(const WaveField& psi, const MassMatrix& mass, double hbar,
                                        const NodeAnalysisOptions& opts) {
  const FlowField flow = polar_decompose(psi, mass, hbar);
  const std::vector<NodeCandidate> nodes = find_nodes(psi);
  const double h = std::min(psi.grid.h(0), psi.grid.h(1));
  std::vector<double> radii = opts.radii;
  if (radii.empty()) radii = {8.0 * h, 16.0 * h, 32.0 * h};
  const double r_lo = opts.r_lo > 0.0 ? opts.r_lo : 2.0 * h;
  const double r_hi = opts.r_hi > 0.0 ? opts.r_hi : 12.0 * h;
  std::vector<NodeAnalysis> out(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) {
    NodeAnalysis& a = out[i];
    a.node_location = nodes[i].location;
    a.located = nodes[i].converged;
    a.circulation = circulation_quantization(flow, a.node_location, radii, opts.circulation);
    a.exponent = fit_density_exponent(flow, a.node_location, r_lo, r_hi, opts.exponent);
    a.regularity = regularity_check(flow, a.node_location, opts.regularity);
    if (!a.located) a.regularity.verdict = Verdict::inconclusive;
  });
  return out;
}

RealField stationary_energy_balance_field(const FlowField& flow, const PotentialSpec& V, double energy) {
  const Grid& g = flow.grid;
  const RealField pot = V.sample(g, flow.mass);
  const RealField lap = laplacian(flow.rho, g, flow.mass);
  const double c = 0.25 * flow.hbar * flow.hbar;
  auto touches_mask = [&](std::size_t k) {
    if (flow.masked(k)) return true;
    for (int a = 0; a < g.dim(); ++a)
      for (int off : {-1, 1}) {
        const long nb = g.neighbour(k, a, off);
        if (nb >= 0 && flow.masked(static_cast<std::size_t>(nb))) return true;
      }
    return false;
  };
  RealField out(flow.rho.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < flow.rho.size(); ++k) {
    if (touches_mask(k)) continue;
    double kin = 0.0;
    for (int a = 0; a < g.dim(); ++a)
      kin += 0.5 * flow.mass.mass(a) * (flow.v[a][k] * flow.v[a][k] + flow.u[a][k] * flow.u[a][k]);
    out[k] = flow.rho[k] * kin + (pot[k] - energy) * flow.rho[k] - c * lap[k];
  }
  return out;
}

double stationary_energy_balance_residual(const FlowField& flow, const PotentialSpec& V, double energy) {
  double worst = 0.0;
  for (double r : stationary_energy_balance_field(flow, V, energy))
    if (!std::isnan(r)) worst = std::max(worst, std::abs(r));
  return worst;
}

}  // namespace paleo
