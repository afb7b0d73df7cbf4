#include "core/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/parallel.hpp"

namespace paleo {

namespace {

double kinetic_energy(const Point& p, const MassMatrix& mass, int dim) {
  double e = 0.0;
  for (int a = 0; a < dim; ++a) e += 0.5 * mass.inverse(a) * p[a] * p[a];
  return e;
}

// Lightweight leapfrog state used by the shooting and the characteristic bundle.
struct Phase {
  Point q{0.0, 0.0};
  Point p{0.0, 0.0};
};

template <class Grad>
void leapfrog(Phase& s, double h, const MassMatrix& mass, int dim, const Grad& grad) {
  Point g = grad(s.q);
  for (int a = 0; a < dim; ++a) s.p[a] -= 0.5 * h * g[a];
  for (int a = 0; a < dim; ++a) s.q[a] += h * mass.inverse(a) * s.p[a];
  g = grad(s.q);
  for (int a = 0; a < dim; ++a) s.p[a] -= 0.5 * h * g[a];
}

double dist(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

ClassicalFlow classical_flow(const Point& q0, const Point& p0, const PotentialSpec& V, const MassMatrix& mass,
                             double t_final, double dt, const ClassicalOptions& opts) {
  require(dt > 0.0 && t_final > 0.0, ErrorCode::invalid_argument, "dt and t_final must be positive");
  require(opts.record_stride >= 1, ErrorCode::invalid_argument, "record_stride must be >= 1");
  const int dim = mass.dim();
  const long steps = std::max(1L, std::lround(std::ceil(t_final / dt - 1e-9)));
  const double h = t_final / steps;
  std::vector<double> times;
  for (long s = 0; s <= steps; ++s)
    if (s % opts.record_stride == 0 || s == steps) times.push_back(opts.t0 + s * h);

  ClassicalFlow out;
  out.path = TrajectorySet(WalkerKind::classical, dim, times, 1);
  out.momenta.resize(times.size());
  auto grad = [&](const Point& q) { return V.gradient(q, mass); };
  Phase st{q0, p0};
  const double e0 = kinetic_energy(p0, mass, dim) + V.value(q0, mass);
  const double escale = std::max(std::abs(e0), std::numeric_limits<double>::min());
  std::size_t rec = 0;
  out.path.set(0, rec, st.q);
  out.momenta[rec++] = st.p;
  for (long s = 1; s <= steps; ++s) {
    Phase next = st;
    leapfrog(next, h, mass, dim, grad);
    if (opts.domain && !opts.domain->periodic() && !opts.domain->contains(next.q)) {
      out.path.truncated = true;
      for (; rec < times.size(); ++rec) {
        out.path.set(0, rec, st.q);
        out.momenta[rec] = st.p;
      }
      break;
    }
    st = next;
    const double e = kinetic_energy(st.p, mass, dim) + V.value(st.q, mass);
    out.energy_drift = std::max(out.energy_drift, std::abs(e - e0) / escale);
    if (s % opts.record_stride == 0 || s == steps) {
      out.path.set(0, rec, st.q);
      out.momenta[rec++] = st.p;
    }
  }
  return out;
}

const char* caustic_indicator_name(CausticReport::Indicator i) noexcept {
  switch (i) {
    case CausticReport::Indicator::none: return "none";
    case CausticReport::Indicator::flow_map_jacobian: return "flow-map-jacobian";
    case CausticReport::Indicator::density_blowup: return "density-blowup";
  }
  return "unknown";
}

CausticReport detect_caustic(const Run& run, const CausticOptions& opts) {
  require(!run.snapshots.empty(), ErrorCode::insufficient_data, "caustic detection needs snapshots");
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  const FlowField f0 = polar_decompose(run.snapshots.front(), run.cfg.mass, run.cfg.hbar);
  const double floor_abs = opts.support_rel * f0.max_rho();
  const std::size_t n = grid.size();

  // Bundle: one characteristic per supported node.
  std::vector<Phase> bundle(n);
  std::vector<unsigned char> live(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (f0.masked(k) || f0.rho[k] < floor_abs) continue;
    live[k] = 1;
    bundle[k].q = grid.point(k);
    for (int a = 0; a < dim; ++a) bundle[k].p[a] = f0.v[a][k] * run.cfg.mass.mass(a);
  }
  // Jacobian entries need both neighbours of a node inside the bundle.
  std::vector<unsigned char> probe(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!live[k]) continue;
    bool ok = true;
    for (int a = 0; a < dim && ok; ++a)
      for (int o : {-1, 1}) {
        const long nb = grid.neighbour(k, a, o);
        if (nb < 0 || !live[nb]) ok = false;
      }
    probe[k] = ok;
  }

  CausticReport rep;
  const double t0 = run.snapshots.front().time;
  const double horizon = run.cfg.t_final;
  const long steps = std::max(1L, std::lround(horizon / run.cfg.dt));
  const double h = horizon / steps;

  auto jacobian_at = [&](std::size_t k) {
    auto d = [&](int comp, int a) {
      const long m1 = grid.neighbour(k, a, -1), p1 = grid.neighbour(k, a, +1);
      double diff = bundle[p1].q[comp] - bundle[m1].q[comp];
      // Undo the periodic jump between the two neighbour start points.
      if (grid.periodic() && comp == a) {
        const double gap = grid.point(p1)[a] - grid.point(m1)[a];
        diff += 2.0 * grid.h(a) - gap;
      }
      return diff / (2.0 * grid.h(a));
    };
    if (dim == 1) return d(0, 0);
    return d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
  };

  double t_jac = std::numeric_limits<double>::infinity();
  Point where{0.0, 0.0};
  for (long s = 1; s <= steps; ++s) {
    const double t = t0 + s * h;
    const double t_mid = t - 0.5 * h;
    parallel_for(n, [&](std::size_t k) {
      if (!live[k]) return;
      auto grad = [&](const Point& q) { return run.potential_gradient_at(q, t_mid); };
      leapfrog(bundle[k], h, run.cfg.mass, dim, grad);
    });
    double jmin = std::numeric_limits<double>::infinity();
    std::size_t kmin = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!probe[k]) continue;
      const double j = jacobian_at(k);
      if (j < jmin) {
        jmin = j;
        kmin = k;
      }
    }
    rep.min_jacobian = std::min(rep.min_jacobian, jmin);
    if (jmin < opts.j_min) {
      t_jac = t;
      where = bundle[kmin].q;
      break;
    }
  }

  double t_blow = std::numeric_limits<double>::infinity();
  const RealField r0 = run.snapshots.front().density();
  const double m0 = *std::max_element(r0.begin(), r0.end());
  for (const auto& snap : run.snapshots) {
    const RealField r = snap.density();
    const auto it = std::max_element(r.begin(), r.end());
    if (*it > opts.blowup_factor * m0) {
      t_blow = snap.time;
      if (t_blow < t_jac) where = grid.point(static_cast<std::size_t>(it - r.begin()));
      break;
    }
  }

  if (std::isfinite(t_jac) || std::isfinite(t_blow)) {
    rep.detected = true;
    rep.has_location = true;
    rep.location = where;
    if (t_jac <= t_blow) {
      rep.t_caustic = t_jac;
      rep.indicator = CausticReport::Indicator::flow_map_jacobian;
    } else {
      rep.t_caustic = t_blow;
      rep.indicator = CausticReport::Indicator::density_blowup;
    }
  }
  return rep;
}

EquivalenceReport equivalence_check(const WaveField& psi0, const Point& q0, const PotentialSpec& V,
                                    const EvolutionConfig& cfg, const CausticOptions& copts) {
  require(cfg.engine == Engine::pre_schrodinger, ErrorCode::config, "equivalence check needs engine = pre-schrodinger");
  const Run run = evolve(psi0, V, cfg);
  return equivalence_check(run, q0, copts);
}

EquivalenceReport equivalence_check(const Run& run, const Point& q0, const CausticOptions& copts) {
  require(run.cfg.engine == Engine::pre_schrodinger, ErrorCode::config,
          "equivalence check needs a pre-schrodinger run");
  const int dim = run.grid.dim();
  EquivalenceReport rep;
  rep.caustic = detect_caustic(run, copts);

  const double t0 = run.snapshots.front().time;
  double horizon = run.snapshots.back().time;
  if (rep.caustic.detected) horizon = std::min(horizon, rep.caustic.t_caustic);
  rep.t_horizon = horizon;

  // Snapshots strictly before the horizon (the caustic snapshot itself is not trusted).
  Run cut;
  cut.grid = run.grid;
  cut.cfg = run.cfg;
  cut.potential = run.potential;
  for (const auto& s : run.snapshots)
    if (s.time < horizon - 1e-12 || (!rep.caustic.detected && s.time <= horizon + 1e-12)) cut.snapshots.push_back(s);
  if (cut.snapshots.size() < 2) {
    std::ostringstream os;
    os << "caustic at t = " << horizon << " leaves no comparison window";
    fail(ErrorCode::horizon_too_short, os.str());
  }

  const FlowSeries series(cut);
  const FlowField& f0 = series.flows().front();
  require(!f0.near_node(q0), ErrorCode::contract, "start point lies on the node mask");
  const Point v0 = f0.velocity_at(q0);
  for (int a = 0; a < dim; ++a) rep.p0[a] = v0[a] * run.cfg.mass.mass(a);

  const std::array<Point, 1> starts{q0};
  rep.guided = integrate_bohmian(series, starts);

  const double t_last = series.times().back();
  ClassicalOptions co;
  co.t0 = t0;
  co.domain = &run.grid;
  const ClassicalFlow cf = classical_flow(q0, rep.p0, run.potential, run.cfg.mass, t_last - t0, run.cfg.dt, co);
  const auto& ct = cf.path.times;
  rep.classical = TrajectorySet(WalkerKind::classical, dim, series.times(), 1);
  for (std::size_t i = 0; i < series.times().size(); ++i) {
    const double t = series.times()[i];
    const auto it = std::lower_bound(ct.begin(), ct.end(), t - 1e-9);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - ct.begin()), ct.size() - 1);
    rep.classical.set(0, i, cf.path.position(0, j));
    rep.max_deviation = std::max(rep.max_deviation, dist(rep.guided.position(0, i), cf.path.position(0, j), dim));
    ++rep.compared;
  }
  return rep;
}

ActionResult two_point_action(const Point& q0, double t0, const Point& q1, double t1, const PotentialSpec& V,
                              const MassMatrix& mass, const ActionOptions& opts) {
  require(t1 > t0, ErrorCode::invalid_argument, "two-point action needs t1 > t0");
  const int dim = mass.dim();
  const double T = t1 - t0;
  const int steps = opts.steps > 0 ? opts.steps : std::max(1000, static_cast<int>(std::ceil(T / 1e-4)));
  const double h = T / steps;
  auto grad = [&](const Point& q) { return V.gradient(q, mass); };

  auto shoot = [&](const Point& p0) {
    Phase s{q0, p0};
    for (int i = 0; i < steps; ++i) leapfrog(s, h, mass, dim, grad);
    return s.q;
  };
  auto mismatch = [&](const Point& p0, Point& f) {
    const Point q = shoot(p0);
    double n2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      f[a] = q[a] - q1[a];
      n2 += f[a] * f[a];
    }
    return std::sqrt(n2);
  };
  // det of d q(t) / d p0 along the path, sampled every step.
  auto conjugate_point = [&](const Point& p0) {
    const double eps = 1e-6 * std::max(1.0, std::abs(p0[0]) + std::abs(p0[1]));
    Phase base{q0, p0};
    std::array<Phase, 2> pert;
    for (int a = 0; a < dim; ++a) {
      pert[a] = base;
      pert[a].p[a] += eps;
    }
    for (int i = 0; i < steps; ++i) {
      leapfrog(base, h, mass, dim, grad);
      for (int a = 0; a < dim; ++a) leapfrog(pert[a], h, mass, dim, grad);
      auto d = [&](int c, int a) { return (pert[a].q[c] - base.q[c]) / eps; };
      const double det = dim == 1 ? d(0, 0) : d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
      if (det <= 0.0) return true;
    }
    return false;
  };

  ActionResult res;
  Point p{0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = (q1[a] - q0[a]) / (mass.inverse(a) * T);
  Point f{0.0, 0.0};
  double err = mismatch(p, f);
  bool converged = err <= opts.tolerance;
  while (!converged && res.iterations < opts.max_iterations) {
    ++res.iterations;
    // Jacobian d q1 / d p0 by forward differences.
    double J[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    for (int b = 0; b < dim; ++b) {
      const double eps = 1e-7 * std::max(1.0, std::abs(p[b]));
      Point pp = p;
      pp[b] += eps;
      const Point q = shoot(pp);
      for (int a = 0; a < dim; ++a) J[a][b] = (q[a] - q1[a] - f[a]) / eps;
    }
    Point step{0.0, 0.0};
    if (dim == 1) {
      if (J[0][0] == 0.0) break;
      step[0] = -f[0] / J[0][0];
    } else {
      const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
      if (det == 0.0) break;
      step[0] = -(J[1][1] * f[0] - J[0][1] * f[1]) / det;
      step[1] = -(-J[1][0] * f[0] + J[0][0] * f[1]) / det;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      Point trial = p;
      for (int a = 0; a < dim; ++a) trial[a] += lambda * step[a];
      Point ft{0.0, 0.0};
      const double e = mismatch(trial, ft);
      if (e < err) {
        p = trial;
        f = ft;
        err = e;
        improved = true;
        break;
      }
    }
    converged = err <= opts.tolerance;
    if (!improved) break;
  }
  if (!converged) {
    if (conjugate_point(p)) fail(ErrorCode::conjugate_point, "window reaches a conjugate point of the start");
    std::ostringstream os;
    os << "shooting did not converge after " << res.iterations << " iterations (mismatch " << err << ")";
    fail(ErrorCode::no_classical_path, os.str());
  }
  if (conjugate_point(p)) fail(ErrorCode::conjugate_point, "window reaches a conjugate point of the start");
  res.p0 = p;

  // Trapezoid rule for L = (1/2) p m p - V on the synchronous leapfrog states.
  Phase s{q0, p};
  auto lagrangian = [&](const Phase& st) { return kinetic_energy(st.p, mass, dim) - V.value(st.q, mass); };
  double acc = 0.5 * lagrangian(s);
  for (int i = 0; i < steps; ++i) {
    leapfrog(s, h, mass, dim, grad);
    acc += (i + 1 == steps ? 0.5 : 1.0) * lagrangian(s);
  }
  res.action = acc * h;

  if (opts.hj_delta > 0.0) {
    ActionOptions inner = opts;
    inner.hj_delta = 0.0;
    const double d = opts.hj_delta;
    const double st_p = two_point_action(q0, t0, q1, t1 + d, V, mass, inner).action;
    const double st_m = two_point_action(q0, t0, q1, t1 - d, V, mass, inner).action;
    double r = (st_p - st_m) / (2.0 * d) + V.value(q1, mass);
    for (int a = 0; a < dim; ++a) {
      Point qp = q1, qm = q1;
      qp[a] += d;
      qm[a] -= d;
      const double g = (two_point_action(q0, t0, qp, t1, V, mass, inner).action -
                        two_point_action(q0, t0, qm, t1, V, mass, inner).action) /
                       (2.0 * d);
      r += 0.5 * mass.inverse(a) * g * g;
    }
    res.hj_residual = std::abs(r);
  }
  return res;
}

const char* hj_mode_name(HjMode m) noexcept {
  switch (m) {
    case HjMode::classical_hj: return "classical-hj";
    case HjMode::quantum_hj: return "quantum-hj";
    case HjMode::continuity: return "continuity";
  }
  return "unknown";
}

HjResidual hj_residuals(const FlowSeries& series, HjMode mode, const ResidualOptions& opts) {
  const auto& flows = series.flows();
  const auto& times = series.times();
  require(flows.size() >= 2, ErrorCode::insufficient_data, "residuals need >= 2 snapshots");
  const Run& run = series.run();
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  const std::size_t n = grid.size();

  HjResidual out;
  const bool schrodinger = run.cfg.engine == Engine::schrodinger;
  if (mode == HjMode::quantum_hj) out.q_included = true;
  if (mode == HjMode::classical_hj) {
    out.q_included = schrodinger;
    if (schrodinger) out.note = "classical-hj on a schrodinger run: Q term included";
  }
  if (mode == HjMode::quantum_hj && !schrodinger) out.note = "quantum-hj on a pre-schrodinger run";

  // Spatial part of the residual at node k of snapshot i, per component.
  auto spatial = [&](std::size_t i, std::size_t k, int a) {
    const FlowField& f = flows[i];
    if (mode == HjMode::continuity) {
      double s = 0.0;
      for (int b = 0; b < dim; ++b) {
        const long m1 = grid.neighbour(k, b, -1), p1 = grid.neighbour(k, b, +1);
        if (m1 >= 0 && p1 >= 0) {
          s += (f.rho[p1] * f.v[b][p1] - f.rho[m1] * f.v[b][m1]) / (2.0 * grid.h(b));
        } else {
          const int sgn = m1 < 0 ? 1 : -1;
          const long n1 = grid.neighbour(k, b, sgn), n2 = grid.neighbour(k, b, 2 * sgn);
          const double f0v = f.rho[k] * f.v[b][k], f1 = f.rho[n1] * f.v[b][n1], f2 = f.rho[n2] * f.v[b][n2];
          s += sgn * (4.0 * (f1 - f0v) - (f2 - f0v)) / (2.0 * grid.h(b));
        }
      }
      return s;
    }
    double s = 0.0;
    for (int b = 0; b < dim; ++b) s += f.v[b][k] * partial_at(f.v[a], grid, k, b);
    const Point gv = run.potential_gradient_at(grid.point(k), times[i]);
    s += f.mass.inverse(a) * gv[a];
    if (out.q_included) s += f.mass.inverse(a) * partial_at(f.q_pot, grid, k, a);
    return s;
  };

  const int comps = mode == HjMode::continuity ? 1 : dim;
  for (std::size_t i = 0; i + 1 < flows.size(); ++i) {
    const FlowField &fa = flows[i], &fb = flows[i + 1];
    const MaskField ka = evaluation_support(fa, opts.floor_rel), kb = evaluation_support(fb, opts.floor_rel);
    const double dt = times[i + 1] - times[i];
    for (std::size_t k = 0; k < n; ++k) {
      if (!ka[k] || !kb[k]) continue;
      bool clear = true;
      for (int a = 0; a < dim && clear; ++a)
        for (int o : {-2, -1, 1, 2}) {
          const long nb = grid.neighbour(k, a, o);
          if (nb >= 0 && (fa.masked(nb) || fb.masked(nb))) clear = false;
        }
      if (!clear) continue;
      for (int a = 0; a < comps; ++a) {
        const double dtx = mode == HjMode::continuity ? (fb.rho[k] - fa.rho[k]) / dt : (fb.v[a][k] - fa.v[a][k]) / dt;
        const double r = dtx + 0.5 * (spatial(i, k, a) + spatial(i + 1, k, a));
        out.value = std::max(out.value, std::abs(r));
      }
    }
  }
  return out;
}

}  // namespace paleo
