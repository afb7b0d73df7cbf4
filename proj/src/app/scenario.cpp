#include "app/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>

#include "core/dynamics.hpp"
#include "core/parallel.hpp"
#include "core/states.hpp"
#include "core/trajectories.hpp"
#include "core/wallstrom.hpp"

namespace paleo::app {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void reject(const Config& c, const std::string& key, const std::string& what) {
  const std::string where = c.origin(key);
  fail(ErrorCode::config, (where.empty() ? c.source() : where) + ": key '" + key + "': " + what);
}

// One value per axis; a single value is used for every axis.
Point per_axis(const Config& c, const std::string& key, int dim) {
  const std::vector<double> v = c.reals(key);
  if (v.size() != 1 && v.size() != static_cast<std::size_t>(dim))
    reject(c, key, "needs 1 or " + std::to_string(dim) + " values, got " + std::to_string(v.size()));
  return {v[0], v.size() > 1 ? v[1] : v[0]};
}

std::array<int, 2> per_axis_int(const Config& c, const std::string& key, int dim) {
  const std::vector<long> v = c.integers(key);
  if (v.size() != 1 && v.size() != static_cast<std::size_t>(dim))
    reject(c, key, "needs 1 or " + std::to_string(dim) + " values, got " + std::to_string(v.size()));
  return {static_cast<int>(v[0]), static_cast<int>(v.size() > 1 ? v[1] : v[0])};
}

Grid build_grid(const Config& c) {
  const long dim = c.integer("grid.dim");
  if (dim != 1 && dim != 2) reject(c, "grid.dim", "must be 1 or 2");
  const int d = static_cast<int>(dim);
  const Point lo = per_axis(c, "grid.lo", d), hi = per_axis(c, "grid.hi", d);
  const std::array<int, 2> n = per_axis_int(c, "grid.n", d);
  std::array<Axis, 2> axes{};
  for (int a = 0; a < d; ++a) {
    if (!(hi[a] > lo[a])) reject(c, "grid.hi", "must exceed grid.lo on every axis");
    if (n[a] < Grid::kMinPoints) reject(c, "grid.n", "needs at least " + std::to_string(Grid::kMinPoints) + " points");
    axes[a] = Axis{lo[a], hi[a], n[a]};
  }
  const Boundary b = c.text("grid.boundary") == "periodic" ? Boundary::periodic : Boundary::dirichlet_zero;
  return Grid(std::span<const Axis>(axes.data(), d), b);
}

PotentialSpec build_potential(const Config& c, int dim) {
  const std::string kind = c.text("potential.kind");
  if (kind == "harmonic") {
    const Point w = per_axis(c, "potential.omega", dim);
    return PotentialSpec::harmonic({w[0], dim > 1 ? w[1] : 0.0});
  }
  if (kind == "barrier") return PotentialSpec::barrier(c.real("potential.height"), c.real("potential.width"));
  if (kind == "double-well") {
    if (!(c.real("potential.a") > 0.0)) reject(c, "potential.a", "must be positive");
    return PotentialSpec::double_well(c.real("potential.a"), c.real("potential.b"));
  }
  return PotentialSpec::free_particle();
}

// Potential acting on one axis of a separable plane potential.
PotentialSpec axis_potential(const Config& c, int axis) {
  const std::string kind = c.text("potential.kind");
  if (kind == "harmonic") {
    const Point w = per_axis(c, "potential.omega", 2);
    return PotentialSpec::harmonic({w[axis], 0.0});
  }
  if (axis == 0) return build_potential(c, 1);
  return PotentialSpec::free_particle();
}

Grid axis_line(const Grid& g, int a) { return Grid::line(g.lo(a), g.hi(a), g.n(a), g.boundary()); }

// A single (non-composite) state read from prefix.kind, prefix.center, ...
// axis >= 0 marks a factor of a product state living on that axis.
WaveField simple_state(const Config& c, const std::string& prefix, const std::string& kind, const Grid& grid,
                       const MassMatrix& mass, double hbar, int axis = -1) {
  const int d = grid.dim();
  if (kind == "gaussian") {
    const Point ctr = per_axis(c, prefix + "center", d), w = per_axis(c, prefix + "width", d);
    const Point p = per_axis(c, prefix + "momentum", d), chirp = per_axis(c, prefix + "chirp", d);
    const double shear = c.real(prefix + "shear");
    for (int a = 0; a < d; ++a)
      if (!(w[a] > 0.0)) reject(c, prefix + "width", "must be positive");
    if (chirp[0] == 0.0 && chirp[1] == 0.0 && shear == 0.0) return gaussian_state(grid, ctr, w, p, hbar);
    return polar_state(
        grid,
        [=](const Point& q) {
          double e = 0.0;
          for (int a = 0; a < d; ++a) e += (q[a] - ctr[a]) * (q[a] - ctr[a]) / (w[a] * w[a]);
          return std::exp(-e);
        },
        [=](const Point& q) {
          double s = shear * std::log(std::cosh(q[0]));
          for (int a = 0; a < d; ++a) s += p[a] * q[a] + 0.5 * chirp[a] * q[a] * q[a];
          return s;
        },
        hbar);
  }
  if (kind == "plane-wave") return plane_wave(grid, per_axis(c, prefix + "k", d));
  if (kind == "eigenstate") {
    const std::array<int, 2> idx = per_axis_int(c, prefix + "index", d);
    Point w = per_axis(c, prefix + "omega", d);
    if (!c.has(prefix + "omega") && c.text("potential.kind") == "harmonic") {
      if (axis < 0) w = per_axis(c, "potential.omega", d);
      else w[0] = per_axis(c, "potential.omega", 2)[axis];
    }
    for (int a = 0; a < d; ++a)
      if (idx[a] < 0) reject(c, prefix + "index", "must be >= 0");
    return harmonic_eigenstate(grid, idx, {w[0], w[1]}, mass, hbar);
  }
  if (kind == "vortex") {
    if (d != 2) reject(c, prefix + "kind", "vortex requires dim=2");
    const long m = c.integer(prefix + "m");
    if (m == 0) reject(c, prefix + "m", "must be nonzero");
    if (!(c.real(prefix + "envelope") > 0.0)) reject(c, prefix + "envelope", "must be positive");
    return make_vortex(static_cast<int>(m), c.real(prefix + "envelope"), grid);
  }
  reject(c, prefix + "kind", "'" + kind + "' is not a simple state");
}

std::string part_prefix(int p) { return "state.part" + std::to_string(p) + "."; }

Complex part_weight(const Config& c, int p) {
  const std::string key = part_prefix(p) + "weight";
  const std::vector<double> w = c.reals(key);
  if (w.empty() || w.size() > 2) reject(c, key, "needs re or re, im");
  return {w[0], w.size() > 1 ? w[1] : 0.0};
}

MassMatrix axis_mass(const MassMatrix& m, int a) { return MassMatrix(1, m.inverse(a)); }

bool needs_time(const std::string& a) { return a != "wallstrom" && a != "energy-balance" && a != "splitting"; }

}  // namespace

bool Scenario::wants(const std::string& analysis) const {
  return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

Scenario build_scenario(const Config& c) {
  Scenario s;
  s.config = c;
  s.name = c.text("name");
  if (s.name.empty()) reject(c, "name", "must not be empty");
  for (char ch : s.name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
      reject(c, "name", "may only hold letters, digits, '_', '-' and '.'");
  s.analyses = c.words("analyses");
  const long seed = c.integer("seed");
  if (seed < 0) reject(c, "seed", "must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);

  s.grid = build_grid(c);
  const int d = s.grid.dim();

  EvolutionConfig& e = s.evolution;
  e.engine = c.text("evolution.engine") == "schrodinger" ? Engine::schrodinger : Engine::pre_schrodinger;
  e.integrator = c.text("evolution.integrator") == "split-step" ? Integrator::split_step : Integrator::crank_nicolson;
  if (e.integrator == Integrator::split_step && !s.grid.periodic())
    reject(c, "evolution.integrator",
           "split-step requires grid.boundary = periodic (rule: dirichlet grids use crank-nicolson)");
  e.dt = c.real("evolution.dt");
  e.t_final = c.real("evolution.t_final");
  e.hbar = c.real("evolution.hbar");
  if (!(e.dt > 0.0)) reject(c, "evolution.dt", "must be positive");
  if (!(e.t_final >= 0.0)) reject(c, "evolution.t_final", "must be >= 0");
  if (!(e.hbar > 0.0)) reject(c, "evolution.hbar", "must be positive");
  const Point mass = per_axis(c, "evolution.mass", d);
  for (int a = 0; a < d; ++a)
    if (!(mass[a] > 0.0)) reject(c, "evolution.mass", "must be positive");
  e.mass = d == 1 ? MassMatrix(1, 1.0 / mass[0]) : MassMatrix{1.0 / mass[0], 1.0 / mass[1]};
  const long stride = c.integer("evolution.snapshot_stride");
  if (stride < 1) reject(c, "evolution.snapshot_stride", "must be >= 1");
  e.snapshot_stride = static_cast<int>(stride);
  e.q_scale = c.real("evolution.q_scale");
  e.eps_node_rel = c.real("evolution.eps_node");
  if (!(e.eps_node_rel >= 0.0)) reject(c, "evolution.eps_node", "must be >= 0");
  e.coupling = Coupling{c.real("coupling.g"), c.real("coupling.t_on"), c.real("coupling.t_off")};
  if (e.coupling.g != 0.0 && d != 2) reject(c, "coupling.g", "coupling requires dim=2");

  s.potential = build_potential(c, d);
  if (e.t_final > 0.0) validate_evolution(s.grid, s.potential, e);

  const std::string kind = c.text("state.kind");
  const std::vector<int> parts = c.parts();
  if (kind == "superposition") {
    if (parts.empty()) reject(c, "state.kind", "superposition needs state.partN keys");
    std::vector<Complex> w;
    std::vector<WaveField> ps;
    for (int p : parts) {
      w.push_back(part_weight(c, p));
      ps.push_back(simple_state(c, part_prefix(p), c.text(part_prefix(p) + "kind"), s.grid, e.mass, e.hbar));
    }
    s.psi0 = superpose(w, ps);
  } else if (kind == "product") {
    if (d != 2) reject(c, "state.kind", "product requires dim=2");
    if (parts != std::vector<int>{0, 1}) reject(c, "state.kind", "product needs exactly state.part0 and state.part1");
    std::array<WaveField, 2> f;
    for (int a = 0; a < 2; ++a)
      f[a] = simple_state(c, part_prefix(a), c.text(part_prefix(a) + "kind"), axis_line(s.grid, a),
                          axis_mass(e.mass, a), e.hbar, a);
    s.psi0 = tensor_product(f[0], f[1]);
    s.factors = std::make_pair(f[0], f[1]);
    s.factor_potentials = {axis_potential(c, 0), axis_potential(c, 1)};
  } else if (kind == "bipartite") {
    if (d != 2) reject(c, "state.kind", "bipartite requires dim=2");
    const std::vector<double> a = c.reals("state.amplitudes");
    if (a.size() != 2 && a.size() != 4) reject(c, "state.amplitudes", "needs a1, a2 or re1, im1, re2, im2");
    const Complex a1 = a.size() == 2 ? Complex(a[0]) : Complex(a[0], a[1]);
    const Complex a2 = a.size() == 2 ? Complex(a[1]) : Complex(a[2], a[3]);
    if (std::norm(a1) + std::norm(a2) <= 0.0) reject(c, "state.amplitudes", "must not all vanish");
    s.bipartite = von_neumann_scenario(s.grid, a1, a2, c.real("state.offset"), c.real("state.branch_width"),
                                       c.real("state.pointer_width"), e.coupling, e.hbar);
    s.bipartite->potential = s.potential;
    s.psi0 = s.bipartite->psi0;
  } else {
    if (!parts.empty()) reject(c, "state.kind", "state.partN keys need superposition or product");
    s.psi0 = simple_state(c, "state.", kind, s.grid, e.mass, e.hbar);
  }

  const std::string tk = c.text("trajectories.kind");
  s.trajectories = tk == "classical"   ? TrajectoryKind::classical
                   : tk == "bohmian"   ? TrajectoryKind::bohmian
                   : tk == "nelsonian" ? TrajectoryKind::nelsonian
                                       : TrajectoryKind::none;
  const long walkers = c.integer("trajectories.walkers");
  if (walkers < 1) reject(c, "trajectories.walkers", "must be >= 1");
  s.walkers = static_cast<std::size_t>(walkers);
  if (c.integer("trajectories.substeps") < 0) reject(c, "trajectories.substeps", "must be >= 0");

  // Cross-field rules for the analyses.
  for (const std::string& a : s.analyses) {
    if (needs_time(a) && e.t_final <= 0.0) reject(c, "evolution.t_final", a + " needs t_final > 0");
    if (a == "wallstrom" && d != 2) reject(c, "analyses", "wallstrom requires dim=2");
    if ((a == "equivalence" || a == "caustic") && e.engine != Engine::pre_schrodinger)
      reject(c, "analyses", a + " requires evolution.engine = pre-schrodinger");
    if (a == "mean-acceleration" && e.engine != Engine::schrodinger)
      reject(c, "analyses", "mean-acceleration requires evolution.engine = schrodinger");
    if (a == "equivariance" && s.trajectories != TrajectoryKind::bohmian &&
        s.trajectories != TrajectoryKind::nelsonian)
      reject(c, "analyses", "equivariance requires trajectories.kind = bohmian or nelsonian");
    if (a == "fokker-planck" && s.trajectories != TrajectoryKind::nelsonian)
      reject(c, "analyses", "fokker-planck requires trajectories.kind = nelsonian");
    if (a == "measurement" && kind != "bipartite") reject(c, "analyses", "measurement requires state.kind = bipartite");
    if ((a == "product-rule" || a == "splitting") && kind != "product")
      reject(c, "analyses", a + " requires state.kind = product");
    if (a == "product-rule" && e.coupling.g != 0.0)
      reject(c, "analyses", "product-rule requires coupling.g = 0");
    if (a == "energy-balance" && !c.has("analysis.energy-balance.energy") && kind != "eigenstate")
      reject(c, "analyses", "energy-balance needs analysis.energy-balance.energy unless state.kind = eigenstate");
    if (a == "equivalence") {
      const std::vector<double> st = c.reals("analysis.equivalence.starts");
      if (st.empty() || st.size() % d != 0)
        reject(c, "analysis.equivalence.starts", "needs a multiple of " + std::to_string(d) + " values");
    }
  }
  for (const KeySpec& k : schema())
    if (k.key.rfind("analysis.", 0) == 0 && k.key.size() > 10 && k.key.ends_with(".tolerance") &&
        !(c.real(k.key) > 0.0))
      reject(c, k.key, "must be positive");
  return s;
}

bool Outcome::passed() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

void add_check(Outcome& out, const std::string& name, double value, double tol, const std::string& note = "") {
  out.checks.push_back(Check{name, value, tol, std::isfinite(value) && value <= tol, "le", note});
}

void add_check_ge(Outcome& out, const std::string& name, double value, double tol, const std::string& note = "") {
  out.checks.push_back(Check{name, value, tol, value >= tol, "ge", note});
}

void put(Outcome& out, const std::string& key, const std::string& value) { out.values.emplace_back(key, value); }
void put(Outcome& out, const std::string& key, double value) { put(out, key, num(value)); }

void trajectories_for(const Scenario& s, const FlowSeries& series, Outcome& out) {
  const Config& c = s.config;
  const Run& run = out.run;
  const RealField rho0 = run.snapshots.front().density();
  switch (s.trajectories) {
    case TrajectoryKind::none: return;
    case TrajectoryKind::bohmian: {
      BohmianOptions o;
      o.substeps = static_cast<int>(c.integer("trajectories.substeps"));
      out.trajectories = integrate_bohmian(series, sample_density(rho0, run.grid, s.walkers, s.seed), o);
      break;
    }
    case TrajectoryKind::nelsonian: {
      NelsonOptions o;
      o.walker_count = s.walkers;
      o.seed = s.seed;
      o.dt_sde = c.real("trajectories.dt_sde");
      out.trajectories = integrate_nelson(series, o);
      break;
    }
    case TrajectoryKind::classical: {
      const std::vector<Point> starts = sample_density(rho0, run.grid, s.walkers, s.seed);
      const FlowField& f0 = series.flows().front();
      const EvolutionConfig& e = s.evolution;
      ClassicalOptions o;
      o.record_stride = e.snapshot_stride;
      o.domain = run.grid.periodic() ? nullptr : &run.grid;
      std::vector<ClassicalFlow> paths(starts.size());
      parallel_for(starts.size(), [&](std::size_t w) {
        const Point v = f0.velocity_at(starts[w]);
        Point p{0.0, 0.0};
        for (int a = 0; a < run.grid.dim(); ++a) p[a] = v[a] / e.mass.inverse(a);
        paths[w] = classical_flow(starts[w], p, s.potential, e.mass, e.t_final, e.dt, o);
      });
      TrajectorySet t(WalkerKind::classical, run.grid.dim(), paths.front().path.times, starts.size());
      t.seed = s.seed;
      for (std::size_t w = 0; w < paths.size(); ++w) {
        t.truncated |= paths[w].path.truncated;
        for (std::size_t k = 0; k < t.steps(); ++k) t.set(w, k, paths[w].path.position(0, k));
      }
      out.trajectories = std::move(t);
      break;
    }
  }
  out.trajectories.seed = s.seed;
  out.has_trajectories = true;
}

void equivariance(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  EquivarianceOptions o;
  o.bin_width_sigma = c.real("analysis.equivariance.bin_width");
  const std::size_t nt = out.run.snapshots.size();
  const long k = std::clamp<long>(c.integer("analysis.equivariance.checkpoints"), 1, static_cast<long>(nt));
  for (long i = 0; i < k; ++i)
    o.checkpoints.push_back(k == 1 ? nt - 1
                                   : static_cast<std::size_t>(std::lround(double(i) * double(nt - 1) / double(k - 1))));
  o.checkpoints.erase(std::unique(o.checkpoints.begin(), o.checkpoints.end()), o.checkpoints.end());
  double worst = 0.0;
  for (const EnsembleStats& st : equivariance_test(out.trajectories, out.run, o)) {
    put(out, "equivariance.l1.t=" + num(st.time), st.l1_distance_to_rho);
    worst = std::max(worst, st.l1_distance_to_rho);
  }
  add_check(out, "equivariance.l1_max", worst, c.real("analysis.equivariance.tolerance"));
}

void fokker_planck(const Scenario& s, const FlowSeries& series, Outcome& out) {
  const Config& c = s.config;
  FokkerPlanckOptions o;
  o.bandwidth = c.real("analysis.fokker-planck.bandwidth");
  o.points = static_cast<int>(c.integer("analysis.fokker-planck.points"));
  const FokkerPlanckResult r = fokker_planck_residual(out.trajectories, series, o);
  put(out, "fokker-planck.bandwidth", r.bandwidth);
  put(out, "fokker-planck.nodes", static_cast<double>(r.evaluated_nodes));
  add_check(out, "fokker-planck.residual", r.residual, c.real("analysis.fokker-planck.tolerance"));
}

void hj(const Scenario& s, const FlowSeries& series, Outcome& out) {
  const Config& c = s.config;
  ResidualOptions o;
  o.floor_rel = c.real("analysis.hj-residuals.floor");
  const double tol = c.real("analysis.hj-residuals.tolerance");
  const HjMode second = s.evolution.engine == Engine::schrodinger ? HjMode::quantum_hj : HjMode::classical_hj;
  for (HjMode m : {HjMode::continuity, second}) {
    const HjResidual r = hj_residuals(series, m, o);
    add_check(out, std::string("hj-residuals.") + hj_mode_name(m), r.value, tol, r.note);
  }
}

void caustic(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  const CausticReport r = detect_caustic(out.run);
  put(out, "caustic.detected", r.detected ? "true" : "false");
  put(out, "caustic.indicator", caustic_indicator_name(r.indicator));
  put(out, "caustic.t_caustic", r.detected ? r.t_caustic : kInf);
  put(out, "caustic.min_jacobian", r.min_jacobian);
  if (r.has_location) put(out, "caustic.location", num(r.location[0]) + ", " + num(r.location[1]));
  const double expected = c.real("analysis.caustic.expected");
  if (expected > 0.0)
    add_check(out, "caustic.time_error", r.detected ? std::abs(r.t_caustic - expected) / expected : kInf,
              c.real("analysis.caustic.tolerance"), r.detected ? "" : "no caustic detected");
}

void equivalence(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  const int d = s.grid.dim();
  const std::vector<double> st = c.reals("analysis.equivalence.starts");
  double domain = 0.0;
  for (int a = 0; a < d; ++a) domain = std::max(domain, s.grid.extent(a));
  double worst = 0.0;
  for (std::size_t i = 0; i * d < st.size(); ++i) {
    const Point q0{st[i * d], d > 1 ? st[i * d + 1] : 0.0};
    const EquivalenceReport r = equivalence_check(out.run, q0);
    const std::string key = "equivalence.start" + std::to_string(i);
    put(out, key + ".deviation", r.max_deviation);
    put(out, key + ".t_horizon", r.t_horizon);
    put(out, key + ".compared", static_cast<double>(r.compared));
    put(out, key + ".caustic", r.caustic.detected ? num(r.caustic.t_caustic) : "none");
    worst = std::max(worst, r.max_deviation);
  }
  put(out, "equivalence.domain", domain);
  add_check(out, "equivalence.deviation", worst, c.real("analysis.equivalence.tolerance") * domain);
}

void wallstrom(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  NodeAnalysisOptions o;
  o.radii = c.reals("analysis.wallstrom.radii");
  o.circulation.quantized_tolerance = c.real("analysis.wallstrom.quantized_tolerance");
  const std::vector<NodeAnalysis> nodes =
      analyze_nodes(out.run.snapshots.back(), s.evolution.mass, s.evolution.hbar, o);
  put(out, "wallstrom.nodes", static_cast<double>(nodes.size()));
  const bool regular = c.boolean("analysis.wallstrom.require_regular");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const NodeAnalysis& n = nodes[k];
    const std::string key = "wallstrom.node" + std::to_string(k);
    put(out, key + ".location", num(n.node_location[0]) + ", " + num(n.node_location[1]));
    put(out, key + ".located", n.located ? "true" : "false");
    put(out, key + ".circulation", n.circulation.circulation);
    put(out, key + ".winding_estimate", n.circulation.winding_estimate);
    put(out, key + ".m", static_cast<double>(n.circulation.nearest_integer_m));
    for (std::size_t r = 0; r < n.circulation.radii.size(); ++r)
      put(out, key + ".winding.r=" + num(n.circulation.radii[r]), n.circulation.windings[r]);
    put(out, key + ".alpha", n.exponent.alpha);
    put(out, key + ".alpha_stderr", n.exponent.alpha_stderr);
    put(out, key + ".delta_rho", n.regularity.delta_rho);
    put(out, key + ".verdict", verdict_name(n.regularity.verdict));
    add_check(out, key + ".quantization_residual", n.circulation.quantization_residual,
              o.circulation.quantized_tolerance);
    if (regular)
      add_check_ge(out, key + ".regular", n.regularity.verdict == Verdict::satisfied ? 1.0 : 0.0, 1.0,
                   verdict_name(n.regularity.verdict));
  }
}

void measurement(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  MeasurementOptions o;
  o.walker_count = s.walkers;
  o.seed = s.seed;
  o.separation_required = c.real("analysis.measurement.separation");
  o.bohmian.substeps = static_cast<int>(c.integer("trajectories.substeps"));
  MeasurementReport r = run_measurement(*s.bipartite, s.evolution, o);
  out.run = std::move(r.run);
  out.trajectories = std::move(r.walkers);
  out.has_trajectories = out.trajectories.walker_count > 0;

  put(out, "measurement.selected_branch", static_cast<double>(r.selected_branch));
  put(out, "measurement.inconclusive", r.inconclusive ? "true" : "false");
  put(out, "measurement.branch_frequency", num(r.branch_frequency[0]) + ", " + num(r.branch_frequency[1]));
  add_check(out, "measurement.residual_other_branch", r.inconclusive ? kInf : r.residual_other_branch,
            c.real("analysis.measurement.tolerance"), r.inconclusive ? "inconclusive" : "");
  add_check_ge(out, "measurement.pointer_separation", r.pointer_separation.back(), o.separation_required);
  if (s.walkers > 1) {
    const std::vector<double> a = c.reals("state.amplitudes");
    const double w1 = a.size() == 2 ? a[0] * a[0] : a[0] * a[0] + a[1] * a[1];
    const double w2 = a.size() == 2 ? a[1] * a[1] : a[2] * a[2] + a[3] * a[3];
    const double p = w1 / (w1 + w2);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(s.walkers));
    put(out, "measurement.born_weight", p);
    put(out, "measurement.binomial_sigma", sigma);
    add_check(out, "measurement.frequency_error", std::abs(r.branch_frequency[0] - p),
              c.real("analysis.measurement.sigmas") * sigma);
  }
  out.measurement = std::move(r);
}

void product_rule(const Scenario& s, Outcome& out) {
  const ProductRuleReport r = product_rule_check(s.factors->first, s.factors->second, s.factor_potentials.first,
                                                 s.factor_potentials.second, s.evolution);
  put(out, "product-rule.rho_deviation", r.rho_deviation);
  put(out, "product-rule.velocity_deviation", r.velocity_deviation);
  add_check(out, "product-rule.deviation", r.deviation, s.config.real("analysis.product-rule.tolerance"));
}

void splitting(const Scenario& s, Outcome& out) {
  const double r = splitting_check(s.evolution.engine, s.factors->first, s.factors->second, s.factor_potentials.first,
                                   s.factor_potentials.second, s.evolution.mass, s.evolution.hbar);
  add_check(out, "splitting.residual", r, s.config.real("analysis.splitting.tolerance"));
}

void energy_balance(const Scenario& s, Outcome& out) {
  const Config& c = s.config;
  const EvolutionConfig& e = s.evolution;
  double energy = c.real("analysis.energy-balance.energy");
  if (!c.has("analysis.energy-balance.energy")) {
    Point w = per_axis(c, "state.omega", s.grid.dim());
    if (!c.has("state.omega") && c.text("potential.kind") == "harmonic") w = per_axis(c, "potential.omega", s.grid.dim());
    energy = harmonic_energy(per_axis_int(c, "state.index", s.grid.dim()), {w[0], w[1]}, e.hbar, s.grid.dim());
  }
  put(out, "energy-balance.energy", energy);
  PolarOptions po;
  po.eps_node_rel = e.eps_node_rel;
  const FlowField flow = polar_decompose(s.psi0, e.mass, e.hbar, po);
  const RealField field = stationary_energy_balance_field(flow, s.potential, energy);
  const double r_ex = c.real("analysis.energy-balance.exclude_radius");
  std::vector<NodeCandidate> nodes;
  if (r_ex > 0.0 && s.grid.dim() == 2) nodes = find_nodes(s.psi0);
  double worst = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (std::isnan(field[k])) continue;
    const Point q = s.grid.point(k);
    bool skip = false;
    for (const NodeCandidate& n : nodes) skip |= std::hypot(q[0] - n.location[0], q[1] - n.location[1]) < r_ex;
    if (!skip) worst = std::max(worst, std::abs(field[k]));
  }
  add_check(out, "energy-balance.residual", worst, c.real("analysis.energy-balance.tolerance"));
}

void mean_acceleration(const Scenario& s, const FlowSeries& series, Outcome& out) {
  ResidualOptions o;
  o.floor_rel = s.config.real("analysis.mean-acceleration.floor");
  add_check(out, "mean-acceleration.residual", mean_acceleration_residual(series, o),
            s.config.real("analysis.mean-acceleration.tolerance"));
}

}  // namespace

Outcome execute(const Scenario& s) {
  Outcome out;
  auto guarded = [&](const std::string& name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      out.checks.push_back(Check{name + ".error", kInf, 0.0, false, "le",
                                 std::string(error_code_name(e.code())) + ": " + e.what()});
    }
  };

  if (s.wants("measurement")) {
    guarded("measurement", [&] { measurement(s, out); });
    if (out.run.snapshots.empty()) {
      out.error = "measurement run failed";
      return out;
    }
  } else if (s.evolution.t_final > 0.0) {
    out.run = evolve(s.psi0, s.potential, s.evolution);
  } else {
    out.run.grid = s.grid;
    out.run.cfg = s.evolution;
    out.run.potential = s.potential;
    out.run.snapshots = {s.psi0};
  }
  if (out.run.stopped_early) put(out, "run.stop_reason", out.run.stop_reason);
  put(out, "run.snapshots", static_cast<double>(out.run.snapshots.size()));
  put(out, "run.max_norm_drift", out.run.max_norm_drift);

  std::unique_ptr<FlowSeries> series;
  const bool timed = out.run.snapshots.size() > 1;
  if (timed) {
    PolarOptions po;
    po.eps_node_rel = s.evolution.eps_node_rel;
    series = std::make_unique<FlowSeries>(out.run, po);
    if (!s.wants("measurement")) guarded("trajectories", [&] { trajectories_for(s, *series, out); });
  }

  for (const std::string& a : s.analyses) {
    if (a == "measurement") continue;
    guarded(a, [&] {
      if (a == "equivariance") {
        if (out.has_trajectories) equivariance(s, out);
      } else if (a == "fokker-planck") {
        if (out.has_trajectories) fokker_planck(s, *series, out);
      } else if (a == "hj-residuals") {
        hj(s, *series, out);
      } else if (a == "caustic") {
        caustic(s, out);
      } else if (a == "equivalence") {
        equivalence(s, out);
      } else if (a == "wallstrom") {
        wallstrom(s, out);
      } else if (a == "product-rule") {
        product_rule(s, out);
      } else if (a == "splitting") {
        splitting(s, out);
      } else if (a == "energy-balance") {
        energy_balance(s, out);
      } else if (a == "mean-acceleration") {
        mean_acceleration(s, *series, out);
      }
    });
  }
  return out;
}

}  // namespace paleo::app
