#include "core/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace paleo {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

Fft::Fft(const Grid& grid) : plans_(std::make_unique<Plans>()), size_(grid.size()) {
  require(grid.periodic(), ErrorCode::config, "spectral transforms need a periodic grid");
  // FFTW wants the slowest axis first: our storage is axis 0 fastest.
  int dims[2];
  const int rank = grid.dim();
  if (rank == 1) {
    dims[0] = grid.n(0);
  } else {
    dims[0] = grid.n(1);
    dims[1] = grid.n(0);
  }
  ComplexField scratch(size_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->fwd = fftw_plan_dft(rank, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->bwd = fftw_plan_dft(rank, dims, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(plans_->fwd && plans_->bwd, ErrorCode::invalid_argument, "FFT planning failed");
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(ComplexField& data) const {
  require(data.size() == size_, ErrorCode::structural, "FFT buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->fwd, p, p);
}

void Fft::backward(ComplexField& data) const {
  require(data.size() == size_, ErrorCode::structural, "FFT buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->bwd, p, p);
}

double Fft::wave_number(const Grid& grid, int a, int i) {
  const int n = grid.n(a);
  const int m = i <= n / 2 ? i : i - n;
  return 2.0 * M_PI * m / grid.extent(a);
}

struct SineTransform::Plan {
  fftw_plan p = nullptr;
  ~Plan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (p) fftw_destroy_plan(p);
  }
};

SineTransform::SineTransform(const Grid& grid) : plan_(std::make_unique<Plan>()) {
  require(!grid.periodic(), ErrorCode::config, "sine transform needs a dirichlet grid");
  int dims[2];
  fftw_r2r_kind kinds[2] = {FFTW_RODFT00, FFTW_RODFT00};
  const int rank = grid.dim();
  size_ = 1;
  for (int a = 0; a < rank; ++a) {
    const int m = grid.n(a) - 2;
    require(m >= 1, ErrorCode::structural, "sine transform needs interior nodes");
    dims[rank - 1 - a] = m;
    size_ *= static_cast<std::size_t>(m);
    scale_ *= 2.0 * (m + 1);
  }
  std::vector<double> scratch(size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_->p = fftw_plan_r2r(rank, dims, scratch.data(), scratch.data(), kinds, FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(plan_->p != nullptr, ErrorCode::invalid_argument, "sine transform planning failed");
}

SineTransform::~SineTransform() = default;
SineTransform::SineTransform(SineTransform&&) noexcept = default;
SineTransform& SineTransform::operator=(SineTransform&&) noexcept = default;

void SineTransform::apply(std::vector<double>& data) const {
  require(data.size() == size_, ErrorCode::structural, "sine transform buffer size mismatch");
  fftw_execute_r2r(plan_->p, data.data(), data.data());
}

RealField spectral_laplacian(const RealField& f, const Grid& grid, const MassMatrix& mass, const Fft& fft) {
  ComplexField c(f.begin(), f.end());
  fft.forward(c);
  const int n0 = grid.n(0), n1 = grid.dim() == 2 ? grid.n(1) : 1;
  for (int j = 0; j < n1; ++j) {
    const double ky = grid.dim() == 2 ? Fft::wave_number(grid, 1, j) : 0.0;
    const double wy = grid.dim() == 2 ? mass.inverse(1) * ky * ky : 0.0;
    for (int i = 0; i < n0; ++i) {
      const double kx = Fft::wave_number(grid, 0, i);
      c[grid.index(i, j)] *= -(mass.inverse(0) * kx * kx + wy);
    }
  }
  fft.backward(c);
  RealField out(f.size());
  const double inv = 1.0 / static_cast<double>(f.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = c[k].real() * inv;
  return out;
}

}  // namespace paleo
