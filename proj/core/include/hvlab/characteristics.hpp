#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hvlab/grid.hpp"
#include "hvlab/potential.hpp"

namespace hvlab {

// N interacting particles on the periodic box, d=1.
struct NBodyState {
  std::vector<double> positions;   // wrapped into [-L, L)
  std::vector<double> velocities;  // same length as positions
  double time = 0.0;

  std::size_t count() const { return positions.size(); }
};

// Wraps x into [-halfwidth, halfwidth).
double wrap_position(double x, double halfwidth);

// H_N = sum |v_m|^2/2 + 1/(2(N-1)) sum_{m != n} Gamma(x_m - x_n).
double nbody_energy(const PotentialSpec& spec, const NBodyState& state);

// Advances the state to t1 (forward or backward) by velocity-Verlet with
// step |dt|; the accelerations are dV_m/dt = 1/(N-1) sum_{n != m}
// Gamma'(X_n - X_m). The last step is shortened to land exactly on t1.
NBodyState flow_nbody(const PotentialSpec& spec, const NBodyState& state,
                      double t1, double dt);

// Time-sliced force field F(t, x) on a periodic position axis, with an
// optional complex companion field K(t, x). Evaluation is linear in time
// between slices and trigonometric (spectral) in space.
class FieldHistory {
 public:
  FieldHistory() = default;
  FieldHistory(Axis axis, std::vector<double> times,
               std::vector<std::vector<double>> force_slices,
               std::vector<std::vector<Complex>> companion_slices = {});

  const Axis& axis() const { return axis_; }
  std::span<const double> times() const { return times_; }
  bool has_companion() const { return !companion_coeffs_.empty(); }

  double force(double t, double x) const;
  Complex companion(double t, double x) const;

  std::span<const Complex> force_coefficients(std::size_t slice) const {
    return force_coeffs_[slice];
  }

 private:
  std::size_t lower_slice(double t) const;
  Complex eval_coeffs(std::span<const Complex> coeffs, double x) const;

  Axis axis_;
  std::vector<double> times_;
  std::vector<std::vector<Complex>> force_coeffs_;
  std::vector<std::vector<Complex>> companion_coeffs_;
};

// One-particle non-autonomous characteristics dX/dt = V, dV/dt = F(t, X),
// integrated by velocity-Verlet from t0 to t1 (either direction) with step
// |dt|. Throws std::out_of_range if [t0, t1] leaves the history range.
struct PhasePoint {
  double x = 0.0;
  double v = 0.0;
};

PhasePoint flow_meanfield(const FieldHistory& history, PhasePoint z, double t0,
                          double t1, double dt);

// Central finite-difference Jacobian of a phase-space flow map at z; returns
// the 2x2 matrix row-major.
using PhaseFlow = std::function<PhasePoint(PhasePoint)>;
std::vector<double> flow_jacobian_fd(const PhaseFlow& flow, PhasePoint z,
                                     double h);

}  // namespace hvlab
