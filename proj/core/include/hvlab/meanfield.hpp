#pragma once

#include <stdexcept>
#include <vector>

#include "hvlab/bounds.hpp"
#include "hvlab/characteristics.hpp"
#include "hvlab/grid.hpp"
#include "hvlab/potential.hpp"

namespace hvlab {

struct SolverParams {
  double dt = 1e-3;
  double picard_tol = 1e-10;
  std::size_t picard_max_iter = 64;
  std::size_t snapshot_stride = 1;
  // When non-empty, overrides snapshot_stride: snapshots are taken after the
  // listed (1-based, sorted) step indices only. Solvers that merge adjacent
  // split-step phases can then skip the closing phase on unsampled steps.
  std::vector<std::size_t> snapshot_steps;
};

// Solver output: field snapshots at `times` (every snapshot_stride steps,
// endpoints always included) and the self-consistent force history F(t, x)
// at every solver step, with the complex line-integral field K(t, x) as the
// companion where the scheme produces one.
struct Trajectory {
  std::vector<double> times;
  std::vector<ComplexField> fields;
  FieldHistory history;
  std::vector<double> picard_residuals;
};

// Fixed-point iteration failed to contract; carries one residual per sweep.
class IterationFailure : public std::runtime_error {
 public:
  IterationFailure(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

// Kinetic evolution of a real phase-space density under the self-consistent
// force -Gamma' * rho: semi-Lagrangian split steps with exact spectral shift
// interpolation, force recomputed mid-step from the drifted density.
Trajectory solve_vlasov(const ComplexField& f0, const PotentialSpec& spec,
                        double T, const SolverParams& params);

// Complex half-density evolution: Picard iteration on [0, T]. Each sweep
// builds rho_n, F_n = -Gamma' * rho_n, K_n = Gamma' * int conj(a) dv a dv,
// then transports the initial state along the F_n characteristics while
// accumulating exp(-int K_n) by trapezoid rule along the trajectory.
// Sweeps stop when consecutive iterates differ by <= picard_tol in
// sup-over-time L2; throws IterationFailure at picard_max_iter.
Trajectory solve_hamilton_vlasov(const ComplexField& alpha0,
                                 const PotentialSpec& spec, double T,
                                 const SolverParams& params);

// Velocity-Fourier side evolution i da/dt = (grad_x . grad_xi + W) a with
// W = V * |a|^2, V(x, xi) = -Gamma'(x) xi: Strang splitting with the exact
// kinetic phase in the doubly-transformed frame and the pointwise potential
// phase, W reduced to two 1-d convolutions against the xi-moments of |a|^2.
Trajectory solve_hamilton_hartree(const ComplexField& alpha_hat0,
                                  const PotentialSpec& spec, double T,
                                  const SolverParams& params);

// H(a) = 1/2 <a, (grad_x . grad_xi + 1/2 W) a>, W as above.
double energy_hartree(const ComplexField& alpha_hat, const PotentialSpec& spec);

}  // namespace hvlab
