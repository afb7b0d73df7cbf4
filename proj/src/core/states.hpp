#pragma once

#include <functional>
#include <vector>

#include "core/grid.hpp"

namespace paleo {

/// Initial-state builders. All results are normalized on their grid.

/// psi ∝ exp(-(q-c)^2 / (2 w^2) + i p.q / hbar), so rho ∝ exp(-(q-c)^2 / w^2).
WaveField gaussian_state(const Grid& grid, Point center, Point width, Point momentum, double hbar);

/// psi ∝ exp(i k.q). On periodic grids k should be commensurate with the box.
WaveField plane_wave(const Grid& grid, Point k);

/// Harmonic-oscillator eigenstate |n_x, n_y> for V = sum omega^2 q^2 / (2 m^{ii}).
WaveField harmonic_eigenstate(const Grid& grid, std::array<int, 2> index, std::array<double, 2> omega,
                              const MassMatrix& mass, double hbar);
/// Energy of the state above: sum hbar omega_a (n_a + 1/2).
double harmonic_energy(std::array<int, 2> index, std::array<double, 2> omega, double hbar, int dim);

/// psi = sqrt(rho(q)) exp(i S(q) / hbar), normalized.
WaveField polar_state(const Grid& grid, const std::function<double(const Point&)>& rho,
                      const std::function<double(const Point&)>& phase, double hbar);

/// sum_i c_i psi_i, renormalized. All parts must share the grid.
WaveField superpose(const std::vector<Complex>& weights, const std::vector<WaveField>& parts);

/// psi(q0, q1) = a(q0) b(q1) on the plane spanned by the two line grids.
WaveField tensor_product(const WaveField& a, const WaveField& b);

/// Physicists' Hermite function of order n at x (normalized on R).
double hermite_function(int n, double x);

}  // namespace paleo
