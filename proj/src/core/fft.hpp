#pragma once

#include <memory>

#include "core/grid.hpp"

namespace paleo {

/// In-place complex DFT over a periodic grid (FFTW backend). Plans are built
/// once per shape; execution is safe from several threads on distinct buffers.
class Fft {
 public:
  explicit Fft(const Grid& grid);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  void forward(ComplexField& data) const;
  /// Unnormalized inverse; callers divide by size().
  void backward(ComplexField& data) const;
  std::size_t size() const noexcept { return size_; }

  /// Angular wave number of DFT bin i on axis a (standard FFT ordering).
  static double wave_number(const Grid& grid, int a, int i);

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t size_ = 0;
};

/// Type-I sine transform over the interior nodes of a dirichlet grid. The
/// transform is its own inverse up to a factor of prod_a 2 (n_a - 1).
class SineTransform {
 public:
  explicit SineTransform(const Grid& grid);
  ~SineTransform();
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;
  SineTransform(SineTransform&&) noexcept;
  SineTransform& operator=(SineTransform&&) noexcept;

  /// data holds the interior nodes, axis 0 fastest.
  void apply(std::vector<double>& data) const;
  std::size_t size() const noexcept { return size_; }
  double scale() const noexcept { return scale_; }

 private:
  struct Plan;
  std::unique_ptr<Plan> plan_;
  std::size_t size_ = 0;
  double scale_ = 1.0;
};

/// Spectral sum_a m^{aa} d^2 f / d x_a^2 of a real periodic field.
RealField spectral_laplacian(const RealField& f, const Grid& grid, const MassMatrix& mass, const Fft& fft);

}  // namespace paleo
