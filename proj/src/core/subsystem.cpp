#include "core/subsystem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "core/madelung.hpp"
#include "core/operators.hpp"
#include "core/parallel.hpp"
#include "core/states.hpp"
#include "core/trajectories.hpp"

namespace paleo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Grid line_of(const Grid& plane, int a) { return Grid::line(plane.lo(a), plane.hi(a), plane.n(a), plane.boundary()); }

MassMatrix axis_mass(const MassMatrix& mass, int a) { return MassMatrix{mass.inverse(a)}; }

void require_plane(const Grid& g, const char* what) {
  require(g.dim() == 2, ErrorCode::structural, std::string(what) + " needs a 2D grid (q_S, q_E)");
}

// Rows bracketing q_E and the weight of the upper one.
struct RowPair {
  int j0 = 0, j1 = 0;
  double s = 0.0;
};

RowPair rows_at(const Grid& g, double qE) {
  const CellLocation loc = locate(g, Point{g.lo(0), qE});
  RowPair r;
  r.j0 = loc.base[1];
  r.j1 = g.periodic() ? (r.j0 + 1) % g.n(1) : std::min(r.j0 + 1, g.n(1) - 1);
  r.s = loc.frac[1];
  return r;
}

ConditionalWave slice_of(const WaveField& psi, const FlowField* flow, double qE, const MassMatrix& mass,
                         double hbar) {
  const Grid& g = psi.grid;
  const RowPair r = rows_at(g, qE);
  ConditionalWave c;
  c.grid = line_of(g, 0);
  c.time = psi.time;
  c.environment_position = qE;
  const int n = g.n(0);
  c.values.resize(n);
  c.rho.resize(n);
  for (int i = 0; i < n; ++i) {
    c.values[i] = (1.0 - r.s) * psi.values[g.index(i, r.j0)] + r.s * psi.values[g.index(i, r.j1)];
    c.rho[i] = std::norm(c.values[i]);
  }
  c.norm_factor = WaveField(c.grid, c.values).norm();
  c.normalized = c.values;
  if (c.norm_factor == 0.0) return c;
  for (Complex& z : c.normalized) z /= c.norm_factor;

  const FlowField slice = polar_decompose(WaveField(c.grid, c.normalized, psi.time), axis_mass(mass, 0), hbar);
  c.velocity = slice.v[0];
  if (flow == nullptr) return c;
  const double rmax = *std::max_element(c.rho.begin(), c.rho.end());
  for (int i = 0; i < n; ++i) {
    const std::size_t k0 = g.index(i, r.j0), k1 = g.index(i, r.j1);
    const double rho_slice = (1.0 - r.s) * flow->rho[k0] + r.s * flow->rho[k1];
    c.rho_reduction_residual = std::max(c.rho_reduction_residual, std::abs(c.rho[i] - rho_slice));
    if (flow->masked(k0) || flow->masked(k1) || slice.masked(i) || c.rho[i] < 1e-6 * rmax) continue;
    const double v_slice = (1.0 - r.s) * flow->v[0][k0] + r.s * flow->v[0][k1];
    c.velocity_reduction_residual = std::max(c.velocity_reduction_residual, std::abs(c.velocity[i] - v_slice));
  }
  return c;
}

double center_of(const WaveField& phi) {
  double m0 = 0.0, m1 = 0.0;
  for (int i = 0; i < phi.grid.n(0); ++i) {
    const double w = std::norm(phi.values[i]);
    m0 += w;
    m1 += w * phi.grid.coord(0, i);
  }
  require(m0 > 0.0, ErrorCode::invalid_argument, "branch state is identically zero");
  return m1 / m0;
}

}  // namespace

ConditionalWave conditional_slice(const WaveField& psi, double qE, const MassMatrix& mass, double hbar) {
  require_plane(psi.grid, "conditional wave");
  FlowField flow = polar_decompose(psi.normalized(), mass, hbar);
  // Reductions compare against the density of psi itself, normalized or not.
  const double scale = psi.norm() * psi.norm();
  for (double& x : flow.rho) x *= scale;
  return slice_of(psi, &flow, qE, mass, hbar);
}

std::vector<ConditionalWave> conditional_wave(const Run& run, std::span<const double> qE_path) {
  require_plane(run.grid, "conditional wave");
  require(qE_path.size() == run.snapshots.size(), ErrorCode::structural,
          "environment path has " + std::to_string(qE_path.size()) + " points for " +
              std::to_string(run.snapshots.size()) + " snapshots");
  std::vector<ConditionalWave> out(run.snapshots.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = conditional_slice(run.snapshots[t], qE_path[t], run.cfg.mass, run.cfg.hbar);
  return out;
}

std::vector<ConditionalWave> conditional_wave(const Run& run, const TrajectorySet& traj, std::size_t walker) {
  require(traj.dim == 2, ErrorCode::structural, "environment path needs 2D trajectories");
  require(walker < traj.walker_count, ErrorCode::invalid_argument, "walker index out of range");
  require(traj.steps() == run.snapshots.size(), ErrorCode::structural, "trajectory and run have different time axes");
  std::vector<double> path(traj.steps());
  for (std::size_t t = 0; t < path.size(); ++t) path[t] = traj.position(walker, t)[1];
  return conditional_wave(run, path);
}

BipartiteScenario von_neumann_scenario(const Grid& grid, Complex a1, Complex a2, double offset, double branch_width,
                                       double pointer_width, const Coupling& coupling, double hbar) {
  require_plane(grid, "measurement scenario");
  const double an = std::sqrt(std::norm(a1) + std::norm(a2));
  require(an > 0.0, ErrorCode::invalid_argument, "branch amplitudes are both zero");
  require(pointer_width > 0.0 && branch_width > 0.0, ErrorCode::invalid_argument, "widths must be positive");
  BipartiteScenario s;
  s.grid = grid;
  s.coupling = coupling;
  s.pointer_width = pointer_width;
  const Grid gs = line_of(grid, 0), ge = line_of(grid, 1);
  s.branches[0] = gaussian_state(gs, {-offset, 0.0}, {branch_width, 0.0}, {0.0, 0.0}, hbar);
  s.branches[1] = gaussian_state(gs, {offset, 0.0}, {branch_width, 0.0}, {0.0, 0.0}, hbar);
  ComplexField sys(gs.size());
  for (std::size_t i = 0; i < sys.size(); ++i)
    sys[i] = (a1 / an) * s.branches[0].values[i] + (a2 / an) * s.branches[1].values[i];
  const WaveField chi = gaussian_state(ge, {0.0, 0.0}, {pointer_width, 0.0}, {0.0, 0.0}, hbar);
  s.psi0 = tensor_product(WaveField(gs, std::move(sys)), chi).normalized();
  return s;
}

MeasurementReport run_measurement(const BipartiteScenario& scenario, const EvolutionConfig& cfg,
                                  const MeasurementOptions& opts) {
  const Grid& g = scenario.grid;
  require_plane(g, "measurement");
  require(scenario.psi0.grid.same_shape(g), ErrorCode::structural, "psi0 does not live on the scenario grid");
  require(cfg.mass.dim() == 2, ErrorCode::config, "measurement needs a 2D mass matrix");
  for (const WaveField& b : scenario.branches)
    require(b.grid.dim() == 1 && b.grid.n(0) == g.n(0), ErrorCode::structural, "branch states must live on the q_S line");
  const bool walkers = scenario.environment == EnvironmentSource::bohmian_walker;
  require(!walkers || opts.walker_count > 0, ErrorCode::config, "walker_count must be positive");

  EvolutionConfig rc = cfg;
  rc.coupling = scenario.coupling;
  Run run = evolve(scenario.psi0, scenario.potential, rc);
  const std::size_t nt = run.snapshots.size();

  MeasurementReport rep;
  rep.times = run.times();
  rep.inconclusive = run.stopped_early;

  // Branch sides of the q_S axis, and the branch states for the overlap.
  const double c0 = center_of(scenario.branches[0]), c1 = center_of(scenario.branches[1]);
  const double mid = 0.5 * (c0 + c1);
  auto side = [&](int i) { return (g.coord(0, i) < mid) == (c0 < c1) ? 0 : 1; };
  std::array<WaveField, 2> phi{scenario.branches[0].normalized(), scenario.branches[1].normalized()};

  auto weights_of = [&](const ConditionalWave& c) {
    std::array<double, 2> w{0.0, 0.0};
    for (int i = 0; i < g.n(0); ++i) w[side(i)] += std::norm(c.normalized[i]);
    const double tot = w[0] + w[1];
    if (tot > 0.0) w = {w[0] / tot, w[1] / tot};
    return w;
  };
  auto overlap = [&](const ConditionalWave& c, int b) {
    Complex acc = 0.0;
    for (int i = 0; i < g.n(0); ++i) acc += std::conj(c.normalized[i]) * phi[b].values[i];
    return std::norm(acc * c.grid.cell_volume());
  };

  // Environment paths.
  std::unique_ptr<FlowSeries> series;
  TrajectorySet traj;
  std::size_t nw = 1;
  if (walkers) {
    series = std::make_unique<FlowSeries>(run);
    const std::vector<Point> starts =
        sample_density(run.snapshots.front().density(), g, opts.walker_count, opts.seed);
    traj = integrate_bohmian(*series, starts, opts.bohmian);
    nw = opts.walker_count;
  } else {
    require(scenario.prescribed_path.size() == nt, ErrorCode::config,
            "prescribed path needs one q_E per snapshot (" + std::to_string(nt) + ")");
  }
  auto qE = [&](std::size_t w, std::size_t t) {
    return walkers ? traj.position(w, t)[1] : scenario.prescribed_path[t];
  };

  rep.branch_weights.resize(nt);
  rep.residual_series.resize(nt);
  rep.pointer_separation.resize(nt);
  rep.conditional.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const WaveField& psi = run.snapshots[t];
    std::unique_ptr<FlowField> own;
    const FlowField* flow = nullptr;
    if (series) {
      flow = &series->flows()[t];
    } else {
      own = std::make_unique<FlowField>(polar_decompose(psi, rc.mass, rc.hbar));
      flow = own.get();
    }
    ConditionalWave c = slice_of(psi, flow, qE(0, t), rc.mass, rc.hbar);
    rep.branch_weights[t] = weights_of(c);
    const int sel = rep.branch_weights[t][0] >= rep.branch_weights[t][1] ? 0 : 1;
    rep.residual_series[t] = overlap(c, 1 - sel);
    rep.conditional[t] = std::move(c);

    // Pointer marginals of the two branches.
    std::array<double, 2> m0{}, m1{}, m2{};
    for (int j = 0; j < g.n(1); ++j) {
      const double y = g.coord(1, j);
      for (int i = 0; i < g.n(0); ++i) {
        const double r = std::norm(psi.values[g.index(i, j)]);
        const int b = side(i);
        m0[b] += r;
        m1[b] += r * y;
        m2[b] += r * y * y;
      }
    }
    const double total = m0[0] + m0[1];
    if (m0[0] <= 1e-6 * total || m0[1] <= 1e-6 * total) {
      rep.pointer_separation[t] = kInf;
    } else {
      std::array<double, 2> mean{}, width{};
      for (int b = 0; b < 2; ++b) {
        mean[b] = m1[b] / m0[b];
        width[b] = std::sqrt(2.0 * std::max(0.0, m2[b] / m0[b] - mean[b] * mean[b]));
      }
      rep.pointer_separation[t] = std::abs(mean[0] - mean[1]) / std::max(width[0], width[1]);
    }
  }
  rep.selected_branch = rep.branch_weights.back()[0] >= rep.branch_weights.back()[1] ? 0 : 1;
  rep.residual_other_branch = rep.residual_series.back();
  if (rep.pointer_separation.back() < opts.separation_required) rep.inconclusive = true;

  rep.walker_branches.assign(nw, 0);
  rep.walker_branches[0] = rep.selected_branch;
  const WaveField& last = run.snapshots.back();
  parallel_for(nw > 1 ? nw - 1 : 0, [&](std::size_t k) {
    const std::size_t w = k + 1;
    const RowPair r = rows_at(g, qE(w, nt - 1));
    double a = 0.0, b = 0.0;
    for (int i = 0; i < g.n(0); ++i) {
      const double p = std::norm((1.0 - r.s) * last.values[g.index(i, r.j0)] + r.s * last.values[g.index(i, r.j1)]);
      (side(i) == 0 ? a : b) += p;
    }
    rep.walker_branches[w] = a >= b ? 0 : 1;
  });
  std::array<std::size_t, 2> count{0, 0};
  for (int b : rep.walker_branches) ++count[b];
  for (int b = 0; b < 2; ++b) rep.branch_frequency[b] = static_cast<double>(count[b]) / static_cast<double>(nw);
  rep.walkers = std::move(traj);
  rep.run = std::move(run);
  return rep;
}

PotentialSpec separable_potential(const Grid& plane, const PotentialSpec& V1, const PotentialSpec& V2,
                                  const MassMatrix& mass) {
  require_plane(plane, "separable potential");
  const MassMatrix m1 = axis_mass(mass, 0), m2 = axis_mass(mass, 1);
  RealField v1(plane.n(0)), v2(plane.n(1));
  for (int i = 0; i < plane.n(0); ++i) v1[i] = V1.value(Point{plane.coord(0, i), 0.0}, m1);
  for (int j = 0; j < plane.n(1); ++j) v2[j] = V2.value(Point{plane.coord(1, j), 0.0}, m2);
  RealField v(plane.size());
  for (int j = 0; j < plane.n(1); ++j)
    for (int i = 0; i < plane.n(0); ++i) v[plane.index(i, j)] = v1[i] + v2[j];
  return PotentialSpec::tabulated(plane, std::move(v));
}

ProductRuleReport product_rule_check(const WaveField& psi1, const WaveField& psi2, const PotentialSpec& V1,
                                     const PotentialSpec& V2, const EvolutionConfig& cfg,
                                     const ProductRuleOptions& opts) {
  require(psi1.grid.dim() == 1 && psi2.grid.dim() == 1, ErrorCode::structural, "product rule takes two 1D factors");
  require(psi1.grid.boundary() == psi2.grid.boundary(), ErrorCode::structural, "factor grids differ in boundary type");
  require(cfg.mass.dim() == 2, ErrorCode::config, "product rule needs a 2D mass matrix");
  require(opts.allow_interaction || cfg.coupling.g == 0.0, ErrorCode::contract,
          "product rule needs non-interacting subsystems, but the coupling is on");

  WaveField joint = tensor_product(psi1, psi2);
  const Grid& g = joint.grid;
  const Propagator pj(g, separable_potential(g, V1, V2, cfg.mass), cfg);
  EvolutionConfig c1 = cfg, c2 = cfg;
  c1.mass = axis_mass(cfg.mass, 0);
  c2.mass = axis_mass(cfg.mass, 1);
  c1.coupling = c2.coupling = Coupling{};
  const Propagator p1(psi1.grid, V1, c1), p2(psi2.grid, V2, c2);
  ComplexField a = psi1.values, b = psi2.values;

  ProductRuleReport rep;
  auto compare = [&](bool flows) {
    double diff = 0.0, ref = 0.0;
    for (int j = 0; j < g.n(1); ++j)
      for (int i = 0; i < g.n(0); ++i) {
        const Complex z = joint.values[g.index(i, j)];
        diff += std::norm(z - a[i] * b[j]);
        ref += std::norm(z);
      }
    rep.deviation = std::max(rep.deviation, std::sqrt(diff / ref));
    if (!flows) return;
    const FlowField fj = polar_decompose(joint, cfg.mass, cfg.hbar);
    const FlowField f1 = polar_decompose(WaveField(psi1.grid, a), c1.mass, cfg.hbar);
    const FlowField f2 = polar_decompose(WaveField(psi2.grid, b), c2.mass, cfg.hbar);
    const double rmax = fj.max_rho();
    for (int j = 0; j < g.n(1); ++j)
      for (int i = 0; i < g.n(0); ++i) {
        const std::size_t k = g.index(i, j);
        rep.rho_deviation = std::max(rep.rho_deviation, std::abs(fj.rho[k] - f1.rho[i] * f2.rho[j]) / rmax);
        if (fj.masked(k) || f1.masked(i) || f2.masked(j) || fj.rho[k] < opts.support_rel * rmax) continue;
        rep.velocity_deviation =
            std::max({rep.velocity_deviation, std::abs(fj.v[0][k] - f1.v[0][i]), std::abs(fj.v[1][k] - f2.v[0][j])});
      }
  };

  compare(true);
  const long steps = std::lround(cfg.t_final / cfg.dt);
  const int stride = std::max(1, cfg.snapshot_stride);
  for (long s = 0; s < steps; ++s) {
    const double t = s * cfg.dt;
    pj.advance(joint.values, t);
    p1.advance(a, t);
    p2.advance(b, t);
    compare((s + 1) % stride == 0 || s + 1 == steps);
  }
  return rep;
}

ComplexField apply_generator(Engine engine, const WaveField& psi, const PotentialSpec& V, const MassMatrix& mass,
                             double hbar) {
  const Grid& g = psi.grid;
  const ComplexField lap = laplacian(psi.values, g, mass);
  const RealField pot = V.sample(g, mass);
  ComplexField out(g.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = -0.5 * hbar * hbar * lap[k] + pot[k] * psi.values[k];
  if (engine == Engine::pre_schrodinger) {
    const RealField q = quantum_potential(psi.density(), g, mass, hbar, 0.0);
    for (std::size_t k = 0; k < out.size(); ++k)
      if (!std::isnan(q[k])) out[k] -= q[k] * psi.values[k];
  }
  return out;
}

double splitting_check(Engine engine, const WaveField& psi1, const WaveField& psi2, const PotentialSpec& V1,
                       const PotentialSpec& V2, const MassMatrix& mass, double hbar) {
  require(mass.dim() == 2, ErrorCode::structural, "splitting check needs a 2D mass matrix");
  const WaveField joint = tensor_product(psi1, psi2);
  const Grid& g = joint.grid;
  const ComplexField whole = apply_generator(engine, joint, separable_potential(g, V1, V2, mass), mass, hbar);
  const ComplexField o1 = apply_generator(engine, psi1, V1, axis_mass(mass, 0), hbar);
  const ComplexField o2 = apply_generator(engine, psi2, V2, axis_mass(mass, 1), hbar);
  double acc = 0.0;
  for (int j = 0; j < g.n(1); ++j)
    for (int i = 0; i < g.n(0); ++i)
      acc += std::norm(whole[g.index(i, j)] - (o1[i] * psi2.values[j] + psi1.values[i] * o2[j]));
  return std::sqrt(acc * g.cell_volume());
}

}  // namespace paleo
