#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hvlab/grid.hpp"

namespace hvlab {

// Unitary Fourier transform in the velocity coordinates,
// alpha_hat(x, xi) = (2 pi)^{-d/2} int alpha(x, v) exp(-i v.xi) dv,
// discretized so that the transform is an exact L2 isometry on the grid.
// The xi axes have n points with spacing pi / L_v.
ComplexField velocity_fourier(const ComplexField& field);
ComplexField inverse_velocity_fourier(const ComplexField& field);

// Same transform restricted to the listed axes, for layouts where the
// velocity axes are not the trailing block (e.g. interleaved per-particle
// pair grids). The result grid carries result_kind.
ComplexField velocity_fourier_axes(const ComplexField& field,
                                   std::span<const std::size_t> axes,
                                   CoordinateKind result_kind);
ComplexField inverse_velocity_fourier_axes(const ComplexField& field,
                                           std::span<const std::size_t> axes,
                                           CoordinateKind result_kind);

// Trigonometric point evaluation of a grid field; exact for band-limited
// data. Construction costs one full FFT, evaluation is O(point count).
class SpectralInterpolant {
 public:
  explicit SpectralInterpolant(const ComplexField& field);
  Complex operator()(std::span<const double> coords) const;

 private:
  PhaseGrid grid_;
  std::vector<Complex> coeffs_;
};

// Spectral derivative along one axis (literal d/d coordinate).
ComplexField spectral_derivative(const ComplexField& field, std::size_t axis);

// Discrete Sobolev norm of order k in {0, 1, 2}. On PositionVelocity grids
// this is the W^{k,2} norm with spectral derivatives; on PositionXi grids the
// velocity-derivative terms become |xi| multipliers, giving the conjugate
// norm that the velocity Fourier transform preserves.
// norm^2 = |a|^2 + sum_i |D_i a|^2 (+ sum_{i,j} |D_i D_j a|^2 for k = 2).
double sobolev_norm(const ComplexField& field, int k);

// sqrt(sum over ordered pairs |D_i D_j a|^2): the full second-derivative L2.
double second_derivative_norm(const ComplexField& field);

// Canonical bracket sum_i (dx_i a dv_i b - dv_i a dx_i b), spectral derivatives.
ComplexField poisson_bracket(const ComplexField& a, const ComplexField& b);

// L2-normalized random field with Gaussian spectrum damped by
// (1 + |k|)^{-smoothness}; deterministic in the seed.
ComplexField random_state(std::uint64_t seed, const PhaseGrid& grid, int smoothness);

}  // namespace hvlab
