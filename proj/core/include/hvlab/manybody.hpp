#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hvlab/characteristics.hpp"
#include "hvlab/grid.hpp"
#include "hvlab/meanfield.hpp"
#include "hvlab/potential.hpp"

namespace hvlab {

// Product state factor^{(x) N}: the N-particle solution is accessed pointwise
// through the transport representation, never materialized for N > 2.
struct ProductInitialData {
  ComplexField factor;  // normalized one-particle PositionVelocity field
  std::size_t n_particles = 2;
};

// Pointwise N-particle Liouville solution at time t: each point is flowed
// backward to 0 and the product of factor values is read off by trigonometric
// interpolation. point.time is ignored; the positions/velocities are taken at
// time t.
std::vector<Complex> evaluate_liouville(const ProductInitialData& data,
                                        const PotentialSpec& spec, double t,
                                        std::span<const NBodyState> points,
                                        double dt);

// Two-particle tensor grids use the interleaved axis order
// (x1, c1, x2, c2) with c = v or xi depending on the coordinate kind.

// factor (x) factor on the interleaved pair grid.
ComplexField pair_product(const ComplexField& factor);

// L2 distance between the pair field and its particle swap.
double pair_swap_asymmetry(const ComplexField& pair);

// Velocity Fourier transform applied to both particle blocks (axes 1 and 3).
ComplexField pair_velocity_fourier(const ComplexField& pair);
ComplexField pair_inverse_velocity_fourier(const ComplexField& pair);

struct PairTrajectory {
  std::vector<double> times;
  std::vector<ComplexField> states;
};

// N=2 evolution i da/dt = (grad_x1.grad_xi1 + grad_x2.grad_xi2 + V(z1-z2)) a
// with V(x, xi) = -Gamma'(x) xi, by Strang splitting with the exact kinetic
// phase in the doubly-transformed frame. The initial state must be swap
// symmetric; grids whose state exceeds memory_budget_bytes are rejected.
PairTrajectory solve_pseudo_schrodinger_pair(
    const ComplexField& initial, const PotentialSpec& spec, double T,
    const SolverParams& params,
    std::size_t memory_budget_bytes = std::size_t{2} << 30);

// Same evolution, but snapshots are streamed to `observe` (time, state values
// aliasing the solver's work buffer) instead of being materialized, so long
// runs that only sample a few instants avoid the per-call and per-snapshot
// copies. `observe` is called for the initial state and then at every
// snapshot step.
void solve_pseudo_schrodinger_pair_stream(
    const ComplexField& initial, const PotentialSpec& spec, double T,
    const SolverParams& params,
    const std::function<void(double, std::span<const Complex>)>& observe,
    std::size_t memory_budget_bytes = std::size_t{2} << 30);

// RHS - LHS of the three mean-field-consistency inequalities, evaluated with
// spectral derivatives on an interleaved two-particle PositionVelocity field;
// the interaction derivative brackets carry the 1/(N-1) coupling at
// N = n_formal. Nonnegative values (up to grid error) confirm the bounds.
struct MfcResiduals {
  double first = 0.0;
  double second = 0.0;
  double third = 0.0;
};

MfcResiduals mfc_residuals(const PotentialSpec& spec, const ComplexField& state,
                           std::size_t n_formal);

}  // namespace hvlab
