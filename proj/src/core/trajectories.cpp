#include "core/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <memory>
#include <sstream>

#include "core/parallel.hpp"

namespace paleo {

FlowSeries::FlowSeries(const Run& run, const PolarOptions& opts) : run_(&run) {
  require(!run.snapshots.empty(), ErrorCode::insufficient_data, "run has no snapshots");
  flows_.resize(run.snapshots.size());
  parallel_for(flows_.size(), [&](std::size_t i) {
    flows_[i] = polar_decompose(run.snapshots[i], run.cfg.mass, run.cfg.hbar, opts);
  });
  times_ = run.times();
}

void FlowSeries::bracket(double t, std::size_t& i, double& s) const {
  if (times_.size() == 1 || t <= times_.front()) {
    i = 0;
    s = 0.0;
    return;
  }
  if (t >= times_.back()) {
    i = times_.size() - 2;
    s = 1.0;
    return;
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  i = static_cast<std::size_t>(it - times_.begin()) - 1;
  s = (t - times_[i]) / (times_[i + 1] - times_[i]);
}

Point FlowSeries::velocity(const Point& q, double t) const {
  std::size_t i;
  double s;
  bracket(t, i, s);
  Point a = flows_[i].velocity_at(q);
  if (s == 0.0) return a;
  const Point b = flows_[i + 1].velocity_at(q);
  for (int k = 0; k < 2; ++k) a[k] += s * (b[k] - a[k]);
  return a;
}

Point FlowSeries::drift(const Point& q, double t) const {
  std::size_t i;
  double s;
  bracket(t, i, s);
  auto at = [&](std::size_t j) {
    Point v = flows_[j].velocity_at(q);
    const Point u = flows_[j].osmotic_at(q);
    return Point{v[0] + u[0], v[1] + u[1]};
  };
  Point a = at(i);
  if (s == 0.0) return a;
  const Point b = at(i + 1);
  for (int k = 0; k < 2; ++k) a[k] += s * (b[k] - a[k]);
  return a;
}

bool FlowSeries::near_node(const Point& q, double t) const {
  std::size_t i;
  double s;
  bracket(t, i, s);
  if (flows_[i].near_node(q)) return true;
  return s > 0.0 && flows_[i + 1].near_node(q);
}

std::uint64_t walker_stream_seed(std::uint64_t seed, std::uint64_t walker) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ walker);
}

namespace {

using Rng = std::mt19937_64;

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Piecewise-linear density along one axis: cumulative mass at cell starts.
struct LinearCdf {
  std::vector<double> x0;   // left end of each cell
  std::vector<double> a, b; // density at both ends
  std::vector<double> cum;  // mass before each cell
  double h = 1.0;
  double total = 0.0;

  LinearCdf(const RealField& rho, const Grid& grid) : h(grid.h(0)) {
    const int n = grid.n(0);
    const int cells = grid.periodic() ? n : n - 1;
    for (int i = 0; i < cells; ++i) {
      x0.push_back(grid.coord(0, i));
      a.push_back(rho[i]);
      b.push_back(rho[(i + 1) % n]);
      cum.push_back(total);
      total += 0.5 * h * (rho[i] + rho[(i + 1) % n]);
    }
  }

  // Mass in [x0[c], x0[c] + s h).
  double partial(std::size_t c, double s) const { return h * (a[c] * s + 0.5 * (b[c] - a[c]) * s * s); }

  double at(double x) const {
    if (x <= x0.front()) return 0.0;
    const double s_all = (x - x0.front()) / h;
    const std::size_t c = static_cast<std::size_t>(std::floor(s_all));
    if (c >= x0.size()) return total;
    return cum[c] + partial(c, s_all - c);
  }

  double draw(Rng& rng) const {
    const double target = uniform01(rng) * total;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1;
    // Skip zero-mass cells the search can land on at their left edge.
    while (c + 1 < cum.size() && a[c] + b[c] == 0.0) ++c;
    const double r = (target - cum[c]) / h;
    const double disc = std::max(0.0, a[c] * a[c] + 2.0 * (b[c] - a[c]) * r);
    const double den = a[c] + std::sqrt(disc);
    const double s = den > 0.0 ? std::clamp(2.0 * r / den, 0.0, 1.0) : 0.5;
    return x0[c] + s * h;
  }
};

class DensitySampler {
 public:
  DensitySampler(const RealField& rho, const Grid& grid) : grid_(grid), rho_(rho) {
    require(rho.size() == grid.size(), ErrorCode::structural, "density does not match grid");
    for (double r : rho) require(r >= 0.0 && std::isfinite(r), ErrorCode::contract, "density must be finite and >= 0");
    rmax_ = *std::max_element(rho.begin(), rho.end());
    require(rmax_ > 0.0, ErrorCode::contract, "cannot sample an all-zero density");
    if (grid.dim() == 1) cdf_ = std::make_unique<LinearCdf>(rho, grid);
  }

  Point draw(Rng& rng) const {
    if (cdf_) return {cdf_->draw(rng), 0.0};
    for (;;) {
      Point p{0.0, 0.0};
      for (int a = 0; a < 2; ++a) {
        p[a] = grid_.lo(a) + uniform01(rng) * grid_.extent(a);
      }
      if (uniform01(rng) * rmax_ < interpolate(rho_, grid_, p)) return p;
    }
  }

 private:
  const Grid& grid_;
  const RealField& rho_;
  double rmax_ = 0.0;
  std::unique_ptr<LinearCdf> cdf_;
};

// One RK4 step on the Bohmian field with recursive halving near nodes.
Point rk4_step(const FlowSeries& fs, const Point& q, double t, double h, int depth, int max_depth,
               std::size_t walker) {
  auto bad = [&](const Point& p, double tt) {
    if (!fs.run().grid.contains(p)) return true;
    return fs.near_node(p, tt);
  };
  auto shift = [](const Point& p, const Point& v, double c) { return Point{p[0] + c * v[0], p[1] + c * v[1]}; };
  bool ok = true;
  Point k1{}, k2{}, k3{}, k4{};
  Point p2{}, p3{}, p4{};
  k1 = fs.velocity(q, t);
  p2 = shift(q, k1, 0.5 * h);
  if ((ok = !bad(p2, t + 0.5 * h))) {
    k2 = fs.velocity(p2, t + 0.5 * h);
    p3 = shift(q, k2, 0.5 * h);
    if ((ok = !bad(p3, t + 0.5 * h))) {
      k3 = fs.velocity(p3, t + 0.5 * h);
      p4 = shift(q, k3, h);
      if ((ok = !bad(p4, t + h))) k4 = fs.velocity(p4, t + h);
    }
  }
  Point out{};
  if (ok) {
    for (int a = 0; a < 2; ++a) out[a] = q[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    ok = !bad(out, t + h);
  }
  if (ok) return out;
  if (depth >= max_depth) {
    std::ostringstream os;
    os << "bohmian walker " << walker << " reached a node at t = " << t << " near (" << q[0];
    if (fs.run().grid.dim() == 2) os << ", " << q[1];
    os << ")";
    fail(ErrorCode::node_encounter, os.str());
  }
  const Point mid = rk4_step(fs, q, t, 0.5 * h, depth + 1, max_depth, walker);
  return rk4_step(fs, mid, t + 0.5 * h, 0.5 * h, depth + 1, max_depth, walker);
}

double std_of(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / x.size());
}

}  // namespace

std::vector<Point> sample_density(const RealField& rho, const Grid& grid, std::size_t count, std::uint64_t seed) {
  const DensitySampler sampler(rho, grid);
  std::vector<Point> out(count);
  parallel_for(count, [&](std::size_t w) {
    Rng rng(walker_stream_seed(seed, w));
    out[w] = sampler.draw(rng);
  });
  return out;
}

TrajectorySet integrate_bohmian(const FlowSeries& series, std::span<const Point> starts, const BohmianOptions& opts) {
  require(!starts.empty(), ErrorCode::invalid_argument, "no walker starts given");
  const Run& run = series.run();
  const int dim = run.grid.dim();
  const auto& times = series.times();
  TrajectorySet out(WalkerKind::bohmian, dim, times, starts.size());
  const int sub = opts.substeps > 0 ? opts.substeps : run.cfg.snapshot_stride;
  parallel_for(starts.size(), [&](std::size_t w) {
    Point q = starts[w];
    if (series.near_node(q, times.front())) {
      std::ostringstream os;
      os << "bohmian walker " << w << " starts on the node mask";
      fail(ErrorCode::node_encounter, os.str());
    }
    out.set(w, 0, q);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      const double h = (times[i + 1] - times[i]) / sub;
      for (int s = 0; s < sub; ++s) q = rk4_step(series, q, times[i] + s * h, h, 0, opts.max_halvings, w);
      out.set(w, i + 1, q);
    }
  });
  return out;
}

VectorField<double> drift_field(const FlowField& flow) {
  VectorField<double> b(flow.grid.dim(), RealField(flow.rho.size(), 0.0));
  for (int a = 0; a < flow.grid.dim(); ++a)
    for (std::size_t k = 0; k < flow.rho.size(); ++k)
      if (!flow.masked(k)) b[a][k] = flow.v[a][k] + flow.u[a][k];
  return b;
}

TrajectorySet integrate_nelson(const FlowSeries& series, const NelsonOptions& opts) {
  require(opts.walker_count >= 1, ErrorCode::invalid_argument, "walker_count must be >= 1");
  require(opts.starts.empty() || opts.starts.size() == opts.walker_count, ErrorCode::invalid_argument,
          "explicit starts must match walker_count");
  const Run& run = series.run();
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  const auto& times = series.times();
  const double dt = opts.dt_sde > 0.0 ? opts.dt_sde : run.cfg.dt;
  std::vector<int> sub(times.size() > 1 ? times.size() - 1 : 0);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const double span = times[i + 1] - times[i];
    const long n = std::lround(span / dt);
    require(n >= 1 && std::abs(n * dt - span) <= 1e-9 * span, ErrorCode::config,
            "dt_sde must divide the snapshot interval");
    sub[i] = static_cast<int>(n);
  }
  std::array<double, 2> sigma{};
  for (int a = 0; a < dim; ++a)
    sigma[a] = opts.diffusion_scale * std::sqrt(run.cfg.hbar * run.cfg.mass.inverse(a));

  TrajectorySet out(WalkerKind::nelsonian, dim, times, opts.walker_count);
  out.seed = opts.seed;
  const DensitySampler sampler(run.snapshots.front().density(), grid);
  std::vector<long> reflections(opts.walker_count, 0);
  parallel_for(opts.walker_count, [&](std::size_t w) {
    Rng rng(walker_stream_seed(opts.seed, w));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Point q = opts.starts.empty() ? sampler.draw(rng) : opts.starts[w];
    out.set(w, 0, q);
    for (std::size_t i = 0; i < sub.size(); ++i) {
      const double h = (times[i + 1] - times[i]) / sub[i];
      const double sq = std::sqrt(h);
      for (int s = 0; s < sub[i]; ++s) {
        const double t = times[i] + s * h;
        const Point b = opts.drift == NelsonOptions::Drift::forward ? series.drift(q, t) : series.velocity(q, t);
        for (int a = 0; a < dim; ++a) {
          const double dB = sigma[a] == 0.0 ? 0.0 : sigma[a] * sq * gauss(rng);
          q[a] += b[a] * h + dB;
          if (grid.periodic()) continue;
          while (q[a] < grid.lo(a) || q[a] > grid.hi(a)) {
            q[a] = q[a] < grid.lo(a) ? 2.0 * grid.lo(a) - q[a] : 2.0 * grid.hi(a) - q[a];
            ++reflections[w];
          }
        }
      }
      out.set(w, i + 1, q);
    }
  });
  out.reflections = std::accumulate(reflections.begin(), reflections.end(), 0L);
  return out;
}

std::vector<double> sample_increments(std::size_t n, double hbar, double inverse_mass, double dt, std::uint64_t seed) {
  constexpr std::size_t block = 4096;
  std::vector<double> out(n);
  const double sigma = std::sqrt(hbar * inverse_mass * dt);
  parallel_for((n + block - 1) / block, [&](std::size_t b) {
    Rng rng(walker_stream_seed(seed, b));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) out[i] = sigma * gauss(rng);
  });
  return out;
}

std::vector<EnsembleStats> equivariance_test(const TrajectorySet& traj, const Run& run,
                                             const EquivarianceOptions& opts) {
  require(traj.steps() == run.snapshots.size(), ErrorCode::structural,
          "trajectory times do not match the run snapshots");
  require(opts.bin_width_sigma > 0.0, ErrorCode::invalid_argument, "bin width must be positive");
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  std::vector<std::size_t> checks = opts.checkpoints;
  if (checks.empty()) {
    checks.resize(traj.steps());
    std::iota(checks.begin(), checks.end(), 0);
  }
  std::vector<EnsembleStats> out;
  for (std::size_t c : checks) {
    require(c < traj.steps(), ErrorCode::invalid_argument, "checkpoint index beyond the run");
    const std::size_t nw = traj.walker_count;
    std::array<std::vector<double>, 2> pos;
    for (int a = 0; a < dim; ++a) pos[a].resize(nw);
    for (std::size_t w = 0; w < nw; ++w) {
      const Point p = grid.wrap(traj.position(w, c));
      for (int a = 0; a < dim; ++a) pos[a][w] = p[a];
    }
    std::array<int, 2> nb{1, 1};
    std::array<double, 2> width{};
    for (int a = 0; a < dim; ++a) {
      width[a] = std::max(grid.h(a), opts.bin_width_sigma * std_of(pos[a]));
      nb[a] = std::max(1, static_cast<int>(std::ceil(grid.extent(a) / width[a] - 1e-12)));
    }
    auto bin_of = [&](int a, double x) {
      return std::clamp(static_cast<int>(std::floor((x - grid.lo(a)) / width[a])), 0, nb[a] - 1);
    };
    EnsembleStats st;
    st.time = traj.times[c];
    for (int a = 0; a < dim; ++a)
      for (int i = 0; i <= nb[a]; ++i) st.edges.push_back(std::min(grid.hi(a), grid.lo(a) + i * width[a]));
    st.histogram.assign(static_cast<std::size_t>(nb[0]) * nb[1], 0.0);
    st.expected.assign(st.histogram.size(), 0.0);
    for (std::size_t w = 0; w < nw; ++w) {
      const int i = bin_of(0, pos[0][w]), j = dim == 2 ? bin_of(1, pos[1][w]) : 0;
      st.histogram[static_cast<std::size_t>(j) * nb[0] + i] += 1.0 / nw;
    }
    const RealField rho = run.snapshots[c].density();
    if (dim == 1) {
      const LinearCdf cdf(rho, grid);
      for (int i = 0; i < nb[0]; ++i)
        st.expected[i] = (cdf.at(st.edges[i + 1]) - cdf.at(st.edges[i])) / cdf.total;
    } else {
      double total = 0.0;
      for (std::size_t k = 0; k < rho.size(); ++k) {
        const Point p = grid.point(k);
        st.expected[static_cast<std::size_t>(bin_of(1, p[1])) * nb[0] + bin_of(0, p[0])] += rho[k];
        total += rho[k];
      }
      for (double& e : st.expected) e /= total;
    }
    for (std::size_t b = 0; b < st.histogram.size(); ++b) st.l1_distance_to_rho += std::abs(st.histogram[b] - st.expected[b]);
    out.push_back(std::move(st));
  }
  return out;
}

FokkerPlanckResult fokker_planck_residual(const TrajectorySet& traj, const FlowSeries& series,
                                          const FokkerPlanckOptions& opts) {
  require(traj.kind == WalkerKind::nelsonian, ErrorCode::contract, "Fokker-Planck residual needs nelsonian walkers");
  require(traj.steps() == series.times().size(), ErrorCode::structural,
          "trajectory times do not match the run snapshots");
  require(traj.steps() >= 2, ErrorCode::insufficient_data, "need at least two snapshots");
  require(opts.points >= 4, ErrorCode::invalid_argument, "verification grid needs >= 4 points per axis");
  const Run& run = series.run();
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  const std::size_t nw = traj.walker_count;
  const double hbar = run.cfg.hbar;

  // Positions wrapped into the box, per time.
  auto wrapped = [&](std::size_t t) {
    std::vector<Point> p(nw);
    for (std::size_t w = 0; w < nw; ++w) p[w] = grid.wrap(traj.position(w, t));
    return p;
  };

  double bw = opts.bandwidth;
  if (bw <= 0.0) {
    const std::vector<Point> p0 = wrapped(0);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      std::vector<double> x(nw);
      for (std::size_t w = 0; w < nw; ++w) x[w] = p0[w][a];
      s = std::max(s, std_of(x));
    }
    bw = 0.94 * s * std::pow(opts.n_ref, -1.0 / 9.0);
  }
  require(bw > 0.0, ErrorCode::insufficient_data, "walker ensemble has no spread");

  const std::size_t pairs = opts.pairs > 0 ? std::min(opts.pairs, traj.steps() - 1) : traj.steps() - 1;
  const int np = opts.points;
  const std::size_t nodes = dim == 2 ? static_cast<std::size_t>(np) * np : static_cast<std::size_t>(np);

  // Kernel sums: rho, grad rho per axis, laplacian rho, flux divergence.
  struct Sums {
    RealField rho, lap, div;
  };
  auto sums_at = [&](std::size_t t, const std::array<double, 2>& lo, const std::array<double, 2>& step) {
    const std::vector<Point> pos = wrapped(t);
    std::vector<Point> b(nw, Point{0.0, 0.0});
    if (!opts.zero_drift)
      parallel_for(nw, [&](std::size_t w) { b[w] = series.drift(pos[w], traj.times[t]); });
    Sums s{RealField(nodes, 0.0), RealField(nodes, 0.0), RealField(nodes, 0.0)};
    const double norm = 1.0 / (nw * std::pow(std::sqrt(2.0 * M_PI) * bw, dim));
    const double inv2 = 1.0 / (bw * bw);
    parallel_for(nodes, [&](std::size_t k) {
      const int i = static_cast<int>(k % np), j = static_cast<int>(k / np);
      const Point x{lo[0] + i * step[0], dim == 2 ? lo[1] + j * step[1] : 0.0};
      double r = 0.0, lap = 0.0, div = 0.0;
      for (std::size_t w = 0; w < nw; ++w) {
        std::array<double, 2> d{};
        double q = 0.0;
        for (int a = 0; a < dim; ++a) {
          d[a] = x[a] - pos[w][a];
          if (grid.periodic()) d[a] -= grid.extent(a) * std::round(d[a] / grid.extent(a));
          q += d[a] * d[a];
        }
        if (q > 64.0 * bw * bw) continue;
        const double kv = std::exp(-0.5 * q * inv2);
        r += kv;
        for (int a = 0; a < dim; ++a) {
          const double dk = -d[a] * inv2 * kv;  // d/dx_a of the kernel
          div += dk * b[w][a];
          lap += run.cfg.mass.inverse(a) * (d[a] * d[a] * inv2 - 1.0) * inv2 * kv;
        }
      }
      s.rho[k] = r * norm;
      s.lap[k] = lap * norm;
      s.div[k] = div * norm;
    });
    return s;
  };

  FokkerPlanckResult res;
  res.bandwidth = bw;
  for (std::size_t p = 0; p < pairs; ++p) {
    std::array<double, 2> lo{0.0, 0.0}, hi{0.0, 0.0}, step{1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = grid.hi(a);
      hi[a] = grid.lo(a);
      for (std::size_t t = p; t <= p + 1; ++t)
        for (std::size_t w = 0; w < nw; ++w) {
          const double x = grid.wrap(traj.position(w, t))[a];
          lo[a] = std::min(lo[a], x);
          hi[a] = std::max(hi[a], x);
        }
      step[a] = (hi[a] - lo[a]) / (np - 1);
    }
    const Sums s1 = sums_at(p, lo, step), s2 = sums_at(p + 1, lo, step);
    const double dt = traj.times[p + 1] - traj.times[p];
    double rmax = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) rmax = std::max(rmax, 0.5 * (s1.rho[k] + s2.rho[k]));
    for (std::size_t k = 0; k < nodes; ++k) {
      if (0.5 * (s1.rho[k] + s2.rho[k]) < opts.floor_rel * rmax) continue;
      const double r = (s2.rho[k] - s1.rho[k]) / dt + 0.5 * (s1.div[k] + s2.div[k]) -
                       opts.diffusion_scale * 0.25 * hbar * (s1.lap[k] + s2.lap[k]);
      res.residual = std::max(res.residual, std::abs(r));
      ++res.evaluated_nodes;
    }
  }
  return res;
}

double mean_acceleration_residual(const FlowSeries& series, const ResidualOptions& opts) {
  const auto& flows = series.flows();
  const auto& times = series.times();
  require(flows.size() >= 3, ErrorCode::insufficient_data, "mean acceleration needs >= 3 snapshots");
  const Run& run = series.run();
  const Grid& grid = run.grid;
  const int dim = grid.dim();
  const std::size_t n = grid.size();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < flows.size(); ++i) {
    const FlowField& f = flows[i];
    const MaskField keep = evaluation_support(f, opts.floor_rel);
    const double span = times[i + 1] - times[i - 1];
    for (std::size_t k = 0; k < n; ++k) {
      if (!keep[k] || flows[i - 1].masked(k) || flows[i + 1].masked(k)) continue;
      bool clear = true;
      for (int a = 0; a < dim && clear; ++a)
        for (int o : {-2, -1, 1, 2}) {
          const long nb = grid.neighbour(k, a, o);
          if (nb >= 0 && f.masked(nb)) clear = false;
        }
      if (!clear) continue;
      const Point q = grid.point(k);
      const Point gv = run.potential_gradient_at(q, times[i]);
      for (int a = 0; a < dim; ++a) {
        double acc = (flows[i + 1].v[a][k] - flows[i - 1].v[a][k]) / span;
        for (int b = 0; b < dim; ++b) acc += f.v[b][k] * partial_at(f.v[a], grid, k, b);
        acc += f.mass.inverse(a) * partial_at(f.q_pot, grid, k, a);
        worst = std::max(worst, std::abs(acc + f.mass.inverse(a) * gv[a]));
      }
    }
  }
  return worst;
}

}  // namespace paleo
