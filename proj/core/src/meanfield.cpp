#include "hvlab/meanfield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>

#include "hvlab/fft.hpp"
#include "hvlab/phasefield.hpp"

namespace hvlab {

namespace {

void require_plane(const PhaseGrid& grid, CoordinateKind kind,
                   const char* where) {
  if (grid.dim() != 1)
    throw std::invalid_argument(std::string(where) + ": d=1 grids only");
  if (grid.kind() != kind)
    throw std::invalid_argument(std::string(where) + ": wrong coordinate kind");
}

std::array<std::size_t, 2> plane_shape(const PhaseGrid& grid) {
  return {grid.axis(0).n, grid.axis(1).n};
}

// g(x, v) <- g(x - s v, v), exact for band-limited g.
void drift_in_x(std::vector<Complex>& v, const PhaseGrid& grid, double s) {
  const auto shape = plane_shape(grid);
  fft::forward_axis(v.data(), shape, 0);
  const Axis& ax = grid.axis(0);
  const Axis& av = grid.axis(1);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    const double k = ax.wavenumber(i);
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double theta = -k * av.coordinate(j) * s;
      v[i * shape[1] + j] *= Complex{std::cos(theta), std::sin(theta)};
    }
  }
  fft::backward_axis(v.data(), shape, 0);
}

// g(x, v) <- g(x, v - s a(x)).
void kick_in_v(std::vector<Complex>& v, const PhaseGrid& grid,
               std::span<const double> accel, double s) {
  const auto shape = plane_shape(grid);
  fft::forward_axis(v.data(), shape, 1);
  const Axis& av = grid.axis(1);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    const double shift = accel[i] * s;
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double theta = -av.wavenumber(j) * shift;
      v[i * shape[1] + j] *= Complex{std::cos(theta), std::sin(theta)};
    }
  }
  fft::backward_axis(v.data(), shape, 1);
}

std::vector<double> density_abs2(std::span<const Complex> v,
                                 const PhaseGrid& grid) {
  const auto shape = plane_shape(grid);
  const double dv = grid.axis(1).spacing();
  std::vector<double> rho(shape[0], 0.0);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < shape[1]; ++j) sum += std::norm(v[i * shape[1] + j]);
    rho[i] = sum * dv;
  }
  return rho;
}

std::vector<double> density_real(std::span<const Complex> v,
                                 const PhaseGrid& grid) {
  const auto shape = plane_shape(grid);
  const double dv = grid.axis(1).spacing();
  std::vector<double> rho(shape[0], 0.0);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < shape[1]; ++j) sum += v[i * shape[1] + j].real();
    rho[i] = sum * dv;
  }
  return rho;
}

// F = -Gamma' * rho: the mean-field acceleration of a particle at x.
std::vector<double> mean_force(const PotentialSpec& spec,
                               std::span<const double> rho) {
  std::vector<double> f = convolve(spec, rho, 1);
  for (double& x : f) x = -x;
  return f;
}

std::vector<double> step_times(double T, double dt, std::size_t* steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("solver: dt must be positive");
  if (T < 0.0) throw std::invalid_argument("solver: T must be >= 0");
  std::size_t n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  if (T == 0.0) n = 0;
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k < n; ++k) times[k] = static_cast<double>(k) * dt;
  times[n] = T;
  *steps = n;
  return times;
}

bool keep_snapshot(std::size_t k, std::size_t steps, std::size_t stride) {
  if (stride == 0) stride = 1;
  return k == 0 || k == steps || k % stride == 0;
}

// K(t, x) = Gamma' * int conj(a) d_v a dv; purely imaginary for any a.
std::vector<Complex> line_integral_field(const ComplexField& field,
                                         const PotentialSpec& spec) {
  const PhaseGrid& grid = field.grid();
  const auto shape = plane_shape(grid);
  const double dv = grid.axis(1).spacing();
  ComplexField dva = spectral_derivative(field, 1);
  std::vector<double> g(shape[0], 0.0);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < shape[1]; ++j)
      sum += (std::conj(field[i * shape[1] + j]) * dva[i * shape[1] + j]).imag();
    g[i] = sum * dv;
  }
  std::vector<double> conv = convolve(spec, g, 1);
  std::vector<Complex> k(shape[0]);
  for (std::size_t i = 0; i < shape[0]; ++i) k[i] = Complex{0.0, conv[i]};
  return k;
}

void multiply_exp_minus(std::vector<Complex>& v, const PhaseGrid& grid,
                        std::span<const Complex> kfield, double s) {
  const auto shape = plane_shape(grid);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    const Complex factor = std::exp(-s * kfield[i]);
    for (std::size_t j = 0; j < shape[1]; ++j) v[i * shape[1] + j] *= factor;
  }
}

ComplexField normalized_or_warn(const ComplexField& field, const char* solver) {
  const double norm = field.l2_norm();
  if (std::abs(norm - 1.0) <= 1e-10) return field;
  std::fprintf(stderr, "%s: initial state norm %.3e != 1, rescaling\n", solver,
               norm);
  return field.normalized();
}

}  // namespace

Trajectory solve_vlasov(const ComplexField& f0, const PotentialSpec& spec,
                        double T, const SolverParams& params) {
  require_plane(f0.grid(), CoordinateKind::PositionVelocity, "solve_vlasov");
  const PhaseGrid& grid = f0.grid();

  double min_re = 0.0;
  double max_im = 0.0;
  for (const Complex& c : f0.values()) {
    min_re = std::min(min_re, c.real());
    max_im = std::max(max_im, std::abs(c.imag()));
  }
  if (min_re < -1e-8 || max_im > 1e-8)
    throw std::invalid_argument("solve_vlasov: density must be real and >= 0");
  std::vector<double> rho = density_real(f0.values(), grid);
  double mass = 0.0;
  for (double r : rho) mass += r;
  mass *= grid.axis(0).spacing();
  if (std::abs(mass - 1.0) > 1e-8)
    throw std::invalid_argument("solve_vlasov: density mass must equal 1");

  std::size_t steps = 0;
  const std::vector<double> times = step_times(T, params.dt, &steps);

  Trajectory out;
  std::vector<std::vector<double>> force_slices;
  force_slices.reserve(steps + 1);
  std::vector<Complex> work(f0.values().begin(), f0.values().end());

  force_slices.push_back(mean_force(spec, rho));
  out.times.push_back(0.0);
  out.fields.push_back(f0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double h = times[k + 1] - times[k];
    drift_in_x(work, grid, 0.5 * h);
    // rho is invariant under the velocity kick, so the force built from the
    // half-drifted density is already the time-centered corrector force.
    kick_in_v(work, grid, mean_force(spec, density_real(work, grid)), h);
    drift_in_x(work, grid, 0.5 * h);
    force_slices.push_back(mean_force(spec, density_real(work, grid)));
    if (keep_snapshot(k + 1, steps, params.snapshot_stride)) {
      out.times.push_back(times[k + 1]);
      out.fields.push_back(ComplexField(grid, work));
    }
  }
  out.history = FieldHistory(grid.axis(0), times, std::move(force_slices));
  return out;
}

Trajectory solve_hamilton_vlasov(const ComplexField& alpha0,
                                 const PotentialSpec& spec, double T,
                                 const SolverParams& params) {
  require_plane(alpha0.grid(), CoordinateKind::PositionVelocity,
                "solve_hamilton_vlasov");
  const ComplexField start = normalized_or_warn(alpha0, "solve_hamilton_vlasov");
  const PhaseGrid& grid = start.grid();

  std::size_t steps = 0;
  const std::vector<double> times = step_times(T, params.dt, &steps);

  // Picard sweeps on the whole interval: the current iterate is the full
  // stack of fields at every step time.
  std::vector<ComplexField> iterate(steps + 1, start);
  std::vector<double> residuals;
  std::vector<std::vector<double>> force_slices(steps + 1);
  std::vector<std::vector<Complex>> k_slices(steps + 1);

  const std::size_t max_iter = std::max<std::size_t>(params.picard_max_iter, 1);
  bool converged = steps == 0;
  for (std::size_t sweep = 0; sweep < max_iter && !converged; ++sweep) {
    for (std::size_t k = 0; k <= steps; ++k) {
      force_slices[k] = mean_force(spec, density_abs2(iterate[k].values(), grid));
      k_slices[k] = line_integral_field(iterate[k], spec);
    }

    std::vector<ComplexField> next(steps + 1, start);
    std::vector<Complex> work(start.values().begin(), start.values().end());
    double residual = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double h = times[k + 1] - times[k];
      multiply_exp_minus(work, grid, k_slices[k], 0.5 * h);
      drift_in_x(work, grid, 0.5 * h);
      std::vector<double> mid_force(force_slices[k].size());
      for (std::size_t i = 0; i < mid_force.size(); ++i)
        mid_force[i] = 0.5 * (force_slices[k][i] + force_slices[k + 1][i]);
      kick_in_v(work, grid, mid_force, h);
      drift_in_x(work, grid, 0.5 * h);
      multiply_exp_minus(work, grid, k_slices[k + 1], 0.5 * h);
      next[k + 1] = ComplexField(grid, work);

      std::vector<double> diff(work.size());
      for (std::size_t i = 0; i < work.size(); ++i)
        diff[i] = std::norm(work[i] - iterate[k + 1][i]);
      residual = std::max(
          residual, std::sqrt(pairwise_sum(diff) * grid.cell_volume()));
    }
    residuals.push_back(residual);
    iterate = std::move(next);
    converged = residual <= params.picard_tol;
  }
  if (!converged)
    throw IterationFailure(
        "solve_hamilton_vlasov: Picard iteration did not converge", residuals);

  for (std::size_t k = 0; k <= steps; ++k) {
    force_slices[k] = mean_force(spec, density_abs2(iterate[k].values(), grid));
    k_slices[k] = line_integral_field(iterate[k], spec);
  }

  Trajectory out;
  out.picard_residuals = std::move(residuals);
  for (std::size_t k = 0; k <= steps; ++k)
    if (keep_snapshot(k, steps, params.snapshot_stride)) {
      out.times.push_back(times[k]);
      out.fields.push_back(std::move(iterate[k]));
    }
  out.history = FieldHistory(grid.axis(0), times, std::move(force_slices),
                             std::move(k_slices));
  return out;
}

namespace {

// Potential phase W(x, xi) = -xi (Gamma' * rho)(x) + (Gamma' * sigma)(x) with
// rho = int |a|^2 dxi, sigma = int xi |a|^2 dxi; V linear in xi makes the
// phase-space convolution separable.
struct HartreePhase {
  std::vector<double> rho_part;    // Gamma' * rho
  std::vector<double> sigma_part;  // Gamma' * sigma
};

HartreePhase hartree_phase(std::span<const Complex> v, const PhaseGrid& grid,
                           const PotentialSpec& spec) {
  const auto shape = plane_shape(grid);
  const Axis& axi = grid.axis(1);
  const double dxi = axi.spacing();
  std::vector<double> rho(shape[0], 0.0);
  std::vector<double> sigma(shape[0], 0.0);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    double m0 = 0.0;
    double m1 = 0.0;
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double a2 = std::norm(v[i * shape[1] + j]);
      m0 += a2;
      m1 += axi.coordinate(j) * a2;
    }
    rho[i] = m0 * dxi;
    sigma[i] = m1 * dxi;
  }
  return {convolve(spec, rho, 1), convolve(spec, sigma, 1)};
}

void apply_potential_phase(std::vector<Complex>& v, const PhaseGrid& grid,
                           const HartreePhase& phase, double s) {
  const auto shape = plane_shape(grid);
  const Axis& axi = grid.axis(1);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double w = -axi.coordinate(j) * phase.rho_part[i] + phase.sigma_part[i];
      const double theta = -s * w;
      v[i * shape[1] + j] *= Complex{std::cos(theta), std::sin(theta)};
    }
}

// Exact propagator of i da/dt = grad_x . grad_xi a over a span s: multiplier
// exp(i k eta s) on the doubly-transformed frame (k, eta dual to x, xi).
void apply_kinetic_phase(std::vector<Complex>& v, const PhaseGrid& grid,
                         double s) {
  const auto shape = plane_shape(grid);
  fft::forward_all(v.data(), shape);
  const Axis& ax = grid.axis(0);
  const Axis& axi = grid.axis(1);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    const double k = ax.wavenumber(i);
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double theta = k * axi.wavenumber(j) * s;
      v[i * shape[1] + j] *= Complex{std::cos(theta), std::sin(theta)};
    }
  }
  fft::backward_all(v.data(), shape);
}

}  // namespace

Trajectory solve_hamilton_hartree(const ComplexField& alpha_hat0,
                                  const PotentialSpec& spec, double T,
                                  const SolverParams& params) {
  require_plane(alpha_hat0.grid(), CoordinateKind::PositionXi,
                "solve_hamilton_hartree");
  const ComplexField start =
      normalized_or_warn(alpha_hat0, "solve_hamilton_hartree");
  const PhaseGrid& grid = start.grid();

  std::size_t steps = 0;
  const std::vector<double> times = step_times(T, params.dt, &steps);

  Trajectory out;
  std::vector<std::vector<double>> force_slices;
  force_slices.reserve(steps + 1);
  std::vector<Complex> work(start.values().begin(), start.values().end());

  {
    HartreePhase phase = hartree_phase(work, grid, spec);
    for (double& x : phase.rho_part) x = -x;
    force_slices.push_back(std::move(phase.rho_part));
  }
  out.times.push_back(0.0);
  out.fields.push_back(start);

  for (std::size_t k = 0; k < steps; ++k) {
    const double h = times[k + 1] - times[k];
    // |a|^2 is invariant under the potential phase, so one phase per
    // half-step reuses the same moments.
    const HartreePhase phase = hartree_phase(work, grid, spec);
    apply_potential_phase(work, grid, phase, 0.5 * h);
    apply_kinetic_phase(work, grid, h);
    HartreePhase after = hartree_phase(work, grid, spec);
    apply_potential_phase(work, grid, after, 0.5 * h);
    for (double& x : after.rho_part) x = -x;
    force_slices.push_back(std::move(after.rho_part));
    if (keep_snapshot(k + 1, steps, params.snapshot_stride)) {
      out.times.push_back(times[k + 1]);
      out.fields.push_back(ComplexField(grid, work));
    }
  }
  out.history = FieldHistory(grid.axis(0), times, std::move(force_slices));
  return out;
}

double energy_hartree(const ComplexField& alpha_hat, const PotentialSpec& spec) {
  require_plane(alpha_hat.grid(), CoordinateKind::PositionXi, "energy_hartree");
  const PhaseGrid& grid = alpha_hat.grid();
  const auto shape = plane_shape(grid);

  const ComplexField mixed =
      spectral_derivative(spectral_derivative(alpha_hat, 0), 1);
  const HartreePhase phase = hartree_phase(alpha_hat.values(), grid, spec);
  const Axis& axi = grid.axis(1);

  std::vector<double> terms(grid.point_count());
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const std::size_t idx = i * shape[1] + j;
      const double w =
          -axi.coordinate(j) * phase.rho_part[i] + phase.sigma_part[i];
      terms[idx] = 0.5 * (std::conj(alpha_hat[idx]) * mixed[idx]).real() +
                   0.25 * w * std::norm(alpha_hat[idx]);
    }
  return pairwise_sum(terms) * grid.cell_volume();
}

}  // namespace hvlab
