#include "core/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/operators.hpp"

namespace paleo {

const char* engine_name(Engine e) noexcept {
  return e == Engine::schrodinger ? "schrodinger" : "pre-schrodinger";
}

const char* integrator_name(Integrator i) noexcept {
  return i == Integrator::split_step ? "split-step" : "crank-nicolson";
}

void validate_evolution(const Grid& grid, const PotentialSpec& V, const EvolutionConfig& cfg) {
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), ErrorCode::config, "dt must be positive");
  require(cfg.t_final > 0.0 && std::isfinite(cfg.t_final), ErrorCode::config, "t_final must be positive");
  require(cfg.hbar > 0.0, ErrorCode::config, "hbar must be positive");
  require(cfg.snapshot_stride >= 1, ErrorCode::config, "snapshot_stride must be >= 1");
  require(cfg.mass.dim() == grid.dim(), ErrorCode::config, "mass matrix dimension does not match grid");
  require(cfg.eps_node_rel > 0.0, ErrorCode::config, "eps_node must be positive");
  if (cfg.integrator == Integrator::split_step)
    require(grid.periodic(), ErrorCode::config, "split-step integrator requires a periodic grid");
  else
    require(!grid.periodic(), ErrorCode::config, "crank-nicolson integrator requires a dirichlet grid");
  if (cfg.coupling.g != 0.0) {
    require(grid.dim() == 2, ErrorCode::config, "measurement coupling requires dim=2");
    require(cfg.coupling.t_off > cfg.coupling.t_on, ErrorCode::config, "coupling window must have t_off > t_on");
  }

  double vmax = 0.0;
  const RealField v = V.sample(grid, cfg.mass);
  for (std::size_t k = 0; k < v.size(); ++k) {
    double x = std::abs(v[k]);
    if (cfg.coupling.g != 0.0) {
      const Point q = grid.point(k);
      x = std::max(x, std::abs(v[k] + cfg.coupling.g * q[0] * q[1]));
    }
    vmax = std::max(vmax, x);
  }
  const double pot_phase = cfg.dt * vmax / cfg.hbar;
  if (pot_phase > kMaxPotentialPhase) {
    std::ostringstream os;
    os << "unstable step: dt*max|V|/hbar = " << pot_phase << " exceeds " << kMaxPotentialPhase;
    fail(ErrorCode::config, os.str());
  }
  double kin = 0.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double kmax = M_PI / grid.h(a);
    kin += cfg.mass.inverse(a) * kmax * kmax;
  }
  const double kin_phase = 0.5 * cfg.dt * cfg.hbar * kin;
  if (kin_phase > kMaxKineticPhase) {
    std::ostringstream os;
    os << "unstable step: dt*hbar*m*k_max^2/2 = " << kin_phase << " exceeds " << kMaxKineticPhase;
    fail(ErrorCode::config, os.str());
  }
}

Propagator::Propagator(const Grid& grid, const PotentialSpec& V, const EvolutionConfig& cfg)
    : grid_(grid), cfg_(cfg) {
  validate_evolution(grid, V, cfg);
  v_ = V.sample(grid, cfg.mass);
  if (cfg.coupling.g != 0.0) {
    coupling_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point q = grid.point(k);
      coupling_[k] = cfg.coupling.g * q[0] * q[1];
    }
  }
  const double hb = cfg.hbar;
  if (cfg.integrator == Integrator::split_step) {
    fft_ = std::make_unique<Fft>(grid);
    kin_phase_.resize(grid.size());
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    const int n1 = grid.dim() == 2 ? grid.n(1) : 1;
    // Q is built from the amplitude with its upper half spectrum removed. The
    // -Q kick couples the modes k0 + q and k0 - q around a carrier k0; when one
    // partner is aliased or damped differently the pair grows. Without the top
    // half of q the partners of every coupled pair stay below Nyquist.
    const double cut = 0.5;
    amp_lap_.resize(grid.size());
    amp_lowpass_.resize(grid.size());
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < grid.n(0); ++i) {
        const double kx = Fft::wave_number(grid, 0, i);
        double e = cfg.mass.inverse(0) * kx * kx;
        bool keep = std::abs(kx) <= cut * M_PI / grid.h(0);
        if (grid.dim() == 2) {
          const double ky = Fft::wave_number(grid, 1, j);
          e += cfg.mass.inverse(1) * ky * ky;
          keep = keep && std::abs(ky) <= cut * M_PI / grid.h(1);
        }
        const std::size_t k = grid.index(i, j);
        amp_lowpass_[k] = keep ? inv_n : 0.0;
        amp_lap_[k] = keep ? -e * inv_n : 0.0;
        kin_phase_[k] = std::polar(inv_n, -0.5 * hb * e * cfg.dt);
      }
  } else {
    if (cfg.engine == Engine::pre_schrodinger) build_sine_filters(0.5);
    for (int a = 0; a < grid.dim(); ++a) {
      const double h = grid.h(a);
      const Complex alpha(0.0, cfg.dt * hb * cfg.mass.inverse(a) / (4.0 * h * h));
      cn_alpha_[a] = alpha;
      const int m = grid.n(a) - 2;
      const Complex b = 1.0 + 2.0 * alpha, off = -alpha;
      cn_cprime_[a].resize(m);
      cn_denom_[a].resize(m);
      cn_denom_[a][0] = b;
      cn_cprime_[a][0] = off / b;
      for (int i = 1; i < m; ++i) {
        cn_denom_[a][i] = b - off * cn_cprime_[a][i - 1];
        cn_cprime_[a][i] = off / cn_denom_[a][i];
      }
    }
  }
}

// Q for the Crank-Nicolson path uses the operator whose exponential is the
// Cayley factor, so that a real amplitude sees the same phase from the kinetic
// step and from -Q. The same half-band cut applies.
void Propagator::build_sine_filters(double cut) {
  sine_ = std::make_unique<SineTransform>(grid_);
  amp_lowpass_.assign(sine_->size(), 0.0);
  amp_lap_.assign(sine_->size(), 0.0);
  const double hb = cfg_.hbar, inv = 1.0 / sine_->scale();
  const int m0 = grid_.n(0) - 2, m1 = grid_.dim() == 2 ? grid_.n(1) - 2 : 1;
  auto axis_energy = [&](int a, int j, int m) {
    const double h = grid_.h(a), s = std::sin(0.5 * M_PI * j / (m + 1));
    const double e = 2.0 * hb * hb * cfg_.mass.inverse(a) * s * s / (h * h);
    return 2.0 * hb / cfg_.dt * std::atan(0.5 * cfg_.dt * e / hb);
  };
  for (int j1 = 1; j1 <= m1; ++j1)
    for (int j0 = 1; j0 <= m0; ++j0) {
      bool keep = j0 <= cut * (m0 + 1);
      double e = axis_energy(0, j0, m0);
      if (grid_.dim() == 2) {
        keep = keep && j1 <= cut * (m1 + 1);
        e += axis_energy(1, j1, m1);
      }
      if (!keep) continue;
      const std::size_t k = static_cast<std::size_t>(j1 - 1) * m0 + (j0 - 1);
      amp_lowpass_[k] = inv;
      amp_lap_[k] = -2.0 * e / (hb * hb) * inv;
    }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;

RealField Propagator::quantum_potential_of(const ComplexField& values) const {
  const std::size_t n = values.size();
  RealField amp(n);
  double rmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::norm(values[k]);
    amp[k] = std::sqrt(r);
    rmax = std::max(rmax, r);
  }
  const double eps = cfg_.eps_node_rel * rmax;
  const double floor_support = cfg_.support_rel * rmax;

  // A zero strictly between two support points of the same grid line means
  // the nodeless (pre-caustic) assumption no longer holds.
  for (int a = 0; a < grid_.dim(); ++a) {
    const int other = grid_.dim() == 2 ? grid_.n(1 - a) : 1;
    for (int line = 0; line < other; ++line) {
      auto idx = [&](int i) { return a == 0 ? grid_.index(i, line) : grid_.index(line, i); };
      int first = -1, last = -1;
      for (int i = 0; i < grid_.n(a); ++i)
        if (amp[idx(i)] * amp[idx(i)] >= floor_support) {
          if (first < 0) first = i;
          last = i;
        }
      for (int i = first + 1; first >= 0 && i < last; ++i) {
        const double r = amp[idx(i)] * amp[idx(i)];
        if (r < eps || r == 0.0) {
          const Point p = grid_.point(idx(i));
          std::ostringstream os;
          os << "pre-caustic violation: zero of psi inside the support at (" << p[0];
          if (grid_.dim() == 2) os << ", " << p[1];
          os << ")";
          fail(ErrorCode::pre_caustic, os.str());
        }
      }
    }
  }

  RealField lap;
  if (fft_) {
    ComplexField c(amp.begin(), amp.end());
    fft_->forward(c);
    ComplexField d = c;
    for (std::size_t k = 0; k < n; ++k) {
      c[k] *= amp_lowpass_[k];
      d[k] *= amp_lap_[k];
    }
    fft_->backward(c);
    fft_->backward(d);
    lap.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      amp[k] = c[k].real();
      lap[k] = d[k].real();
    }
  } else {
    lap.assign(n, 0.0);
    const int m0 = grid_.n(0) - 2, m1 = grid_.dim() == 2 ? grid_.n(1) - 2 : 1;
    auto node = [&](int i0, int i1) { return grid_.index(i0 + 1, grid_.dim() == 2 ? i1 + 1 : 0); };
    std::vector<double> c(sine_->size());
    for (int i1 = 0; i1 < m1; ++i1)
      for (int i0 = 0; i0 < m0; ++i0) c[static_cast<std::size_t>(i1) * m0 + i0] = amp[node(i0, i1)];
    sine_->apply(c);
    std::vector<double> d = c;
    for (std::size_t k = 0; k < c.size(); ++k) {
      c[k] *= amp_lowpass_[k];
      d[k] *= amp_lap_[k];
    }
    sine_->apply(c);
    sine_->apply(d);
    std::fill(amp.begin(), amp.end(), 0.0);
    for (int i1 = 0; i1 < m1; ++i1)
      for (int i0 = 0; i0 < m0; ++i0) {
        const std::size_t k = static_cast<std::size_t>(i1) * m0 + i0;
        amp[node(i0, i1)] = c[k];
        lap[node(i0, i1)] = d[k];
      }
  }
  RealField q(n, 0.0);
  const double c = -0.5 * cfg_.hbar * cfg_.hbar;
  for (std::size_t k = 0; k < n; ++k)
    if (amp[k] > 0.0 && amp[k] * amp[k] >= eps) q[k] = c * lap[k] / amp[k];
  return q;
}

void Propagator::potential_kick(ComplexField& values, double t_mid, double tau) const {
  const bool coupled = !coupling_.empty() && cfg_.coupling.active(t_mid);
  RealField q;
  if (cfg_.engine == Engine::pre_schrodinger && cfg_.q_scale != 0.0) q = quantum_potential_of(values);
  const double w = -tau / cfg_.hbar;
  for (std::size_t k = 0; k < values.size(); ++k) {
    double e = v_[k];
    if (coupled) e += coupling_[k];
    if (!q.empty()) e -= cfg_.q_scale * q[k];
    values[k] *= std::polar(1.0, w * e);
  }
}

void Propagator::cayley_axis(ComplexField& values, int a) const {
  const int n = grid_.n(a), m = n - 2;
  const int other = grid_.dim() == 2 ? grid_.n(1 - a) : 1;
  const Complex alpha = cn_alpha_[a];
  const Complex bdiag = 1.0 - 2.0 * alpha, off = -alpha;
  const ComplexField& cp = cn_cprime_[a];
  const ComplexField& den = cn_denom_[a];
  ComplexField line(n), d(m);
  for (int l = 0; l < other; ++l) {
    auto idx = [&](int i) { return a == 0 ? grid_.index(i, l) : grid_.index(l, i); };
    for (int i = 0; i < n; ++i) line[i] = values[idx(i)];
    line[0] = line[n - 1] = Complex{};
    // rhs = (1 - i dt H / 2 hbar) psi on the interior nodes
    for (int i = 0; i < m; ++i) d[i] = bdiag * line[i + 1] + alpha * (line[i] + line[i + 2]);
    d[0] = d[0] / den[0];
    for (int i = 1; i < m; ++i) d[i] = (d[i] - off * d[i - 1]) / den[i];
    for (int i = m - 2; i >= 0; --i) d[i] -= cp[i] * d[i + 1];
    values[idx(0)] = values[idx(n - 1)] = Complex{};
    for (int i = 0; i < m; ++i) values[idx(i + 1)] = d[i];
  }
}

void Propagator::kinetic(ComplexField& values) const {
  if (fft_) {
    fft_->forward(values);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] *= kin_phase_[k];
    fft_->backward(values);
    return;
  }
  for (int a = 0; a < grid_.dim(); ++a) cayley_axis(values, a);
}

void Propagator::advance(ComplexField& values, double t) const {
  require(values.size() == grid_.size(), ErrorCode::structural, "wave field does not match propagator grid");
  const double half = 0.5 * cfg_.dt, t_mid = t + half;
  potential_kick(values, t_mid, half);
  kinetic(values);
  potential_kick(values, t_mid, half);
}

WaveField Propagator::step(const WaveField& psi) const {
  require(psi.grid.same_shape(grid_), ErrorCode::structural, "wave field does not match propagator grid");
  ComplexField v = psi.values;
  advance(v, psi.time);
  return WaveField(grid_, std::move(v), psi.time + cfg_.dt);
}

ComplexField Propagator::apply_kinetic_operator(const ComplexField& values) const {
  ComplexField out(values.size(), Complex{});
  if (fft_) {
    ComplexField c = values;
    fft_->forward(c);
    const int n1 = grid_.dim() == 2 ? grid_.n(1) : 1;
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < grid_.n(0); ++i) {
        double e = cfg_.mass.inverse(0) * std::pow(Fft::wave_number(grid_, 0, i), 2);
        if (grid_.dim() == 2) e += cfg_.mass.inverse(1) * std::pow(Fft::wave_number(grid_, 1, j), 2);
        c[grid_.index(i, j)] *= 0.5 * cfg_.hbar * cfg_.hbar * e / static_cast<double>(values.size());
      }
    fft_->backward(c);
    return c;
  }
  const double c = -0.5 * cfg_.hbar * cfg_.hbar;
  for (std::size_t k = 0; k < values.size(); ++k)
    for (int a = 0; a < grid_.dim(); ++a) {
      const long m1 = grid_.neighbour(k, a, -1), p1 = grid_.neighbour(k, a, +1);
      if (m1 < 0 || p1 < 0) continue;  // edge nodes are pinned to zero
      const double h = grid_.h(a);
      out[k] += c * cfg_.mass.inverse(a) * (values[p1] - 2.0 * values[k] + values[m1]) / (h * h);
    }
  return out;
}

double Propagator::energy(const WaveField& psi, double t) const {
  const ComplexField tpsi = apply_kinetic_operator(psi.values);
  const bool coupled = !coupling_.empty() && cfg_.coupling.active(t);
  double e = 0.0;
  for (std::size_t k = 0; k < tpsi.size(); ++k) {
    double v = v_[k];
    if (coupled) v += coupling_[k];
    e += (std::conj(psi.values[k]) * (tpsi[k] + v * psi.values[k])).real();
  }
  return e * grid_.cell_volume();
}

WaveField step_schrodinger(const WaveField& psi, const PotentialSpec& V, const EvolutionConfig& cfg) {
  require(cfg.engine == Engine::schrodinger, ErrorCode::config, "step_schrodinger needs engine = schrodinger");
  return Propagator(psi.grid, V, cfg).step(psi);
}

WaveField step_pre_schrodinger(const WaveField& psi, const PotentialSpec& V, const EvolutionConfig& cfg) {
  require(cfg.engine == Engine::pre_schrodinger, ErrorCode::config,
          "step_pre_schrodinger needs engine = pre-schrodinger");
  return Propagator(psi.grid, V, cfg).step(psi);
}

std::vector<double> Run::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.time);
  return t;
}

double Run::potential_at(const Point& q, double t) const {
  double v = potential.value(q, cfg.mass);
  if (cfg.coupling.active(t)) v += cfg.coupling.g * q[0] * q[1];
  return v;
}

Point Run::potential_gradient_at(const Point& q, double t) const {
  Point g = potential.gradient(q, cfg.mass);
  if (grid.dim() == 2 && cfg.coupling.active(t)) {
    g[0] += cfg.coupling.g * q[1];
    g[1] += cfg.coupling.g * q[0];
  }
  return g;
}

Run evolve(const WaveField& psi0, const PotentialSpec& V, const EvolutionConfig& cfg) {
  const Propagator prop(psi0.grid, V, cfg);
  Run run;
  run.grid = psi0.grid;
  run.cfg = cfg;
  run.potential = V;
  run.snapshots.push_back(psi0);
  const long steps = std::max(1L, std::lround(cfg.t_final / cfg.dt));
  const double n0 = psi0.norm();
  ComplexField cur = psi0.values;
  for (long s = 0; s < steps; ++s) {
    const double t = psi0.time + s * cfg.dt;
    try {
      prop.advance(cur, t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::pre_caustic) throw;
      run.stopped_early = true;
      run.stop_reason = e.what();
      break;
    }
    const long done = s + 1;
    if (done % cfg.snapshot_stride == 0 || done == steps) {
      WaveField w(psi0.grid, cur, psi0.time + done * cfg.dt);
      run.max_norm_drift = std::max(run.max_norm_drift, std::abs(w.norm() - n0));
      run.snapshots.push_back(std::move(w));
    }
  }
  return run;
}

}  // namespace paleo
