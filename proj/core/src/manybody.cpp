#include "hvlab/manybody.hpp"

#include <fftw3.h>

#ifdef __linux__
#include <sys/mman.h>
#endif

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <stdexcept>

#include "hvlab/fft.hpp"
#include "hvlab/phasefield.hpp"

namespace hvlab {

namespace {

void require_pair_grid(const PhaseGrid& grid, const char* where) {
  if (grid.axis_count() != 4)
    throw std::invalid_argument(std::string(where) + ": rank-4 pair grid required");
  if (grid.axis(0).n != grid.axis(2).n || grid.axis(1).n != grid.axis(3).n ||
      grid.axis(0).halfwidth != grid.axis(2).halfwidth ||
      grid.axis(1).halfwidth != grid.axis(3).halfwidth)
    throw std::invalid_argument(std::string(where) +
                                ": particle blocks must share axes");
}

std::array<std::size_t, 4> pair_shape(const PhaseGrid& grid) {
  return {grid.axis(0).n, grid.axis(1).n, grid.axis(2).n, grid.axis(3).n};
}

}  // namespace

std::vector<Complex> evaluate_liouville(const ProductInitialData& data,
                                        const PotentialSpec& spec, double t,
                                        std::span<const NBodyState> points,
                                        double dt) {
  if (data.n_particles < 2)
    throw std::invalid_argument("evaluate_liouville: need N >= 2");
  if (data.factor.grid().kind() != CoordinateKind::PositionVelocity ||
      data.factor.grid().dim() != 1)
    throw std::invalid_argument(
        "evaluate_liouville: factor must be a d=1 PositionVelocity field");

  const SpectralInterpolant interp(data.factor);
  std::vector<Complex> out;
  out.reserve(points.size());
  for (const NBodyState& point : points) {
    if (point.count() != data.n_particles)
      throw std::invalid_argument("evaluate_liouville: point size mismatch");
    NBodyState state = point;
    state.time = t;
    const NBodyState origin = flow_nbody(spec, state, 0.0, dt);
    Complex value{1.0, 0.0};
    for (std::size_t m = 0; m < origin.count(); ++m) {
      const std::array<double, 2> z{origin.positions[m], origin.velocities[m]};
      value *= interp(z);
    }
    out.push_back(value);
  }
  return out;
}

ComplexField pair_product(const ComplexField& factor) {
  const PhaseGrid& g = factor.grid();
  if (g.axis_count() != 2)
    throw std::invalid_argument("pair_product: one-particle factor required");
  std::vector<Axis> axes{g.axis(0), g.axis(1), g.axis(0), g.axis(1)};
  PhaseGrid pair_grid(g.kind(), std::move(axes));
  std::vector<Complex> values(pair_grid.point_count());
  const std::size_t one = g.point_count();
  for (std::size_t a = 0; a < one; ++a)
    for (std::size_t b = 0; b < one; ++b)
      values[a * one + b] = factor[a] * factor[b];
  return ComplexField(std::move(pair_grid), std::move(values));
}

double pair_swap_asymmetry(const ComplexField& pair) {
  require_pair_grid(pair.grid(), "pair_swap_asymmetry");
  const std::size_t one = pair.grid().axis(0).n * pair.grid().axis(1).n;
  std::vector<double> diff(pair.grid().point_count());
  constexpr std::size_t kTile = 64;
  for (std::size_t a0 = 0; a0 < one; a0 += kTile)
    for (std::size_t b0 = 0; b0 < one; b0 += kTile)
      for (std::size_t a = a0; a < std::min(a0 + kTile, one); ++a)
        for (std::size_t b = b0; b < std::min(b0 + kTile, one); ++b)
          diff[a * one + b] = std::norm(pair[a * one + b] - pair[b * one + a]);
  return std::sqrt(pairwise_sum(diff) * pair.grid().cell_volume());
}

ComplexField pair_velocity_fourier(const ComplexField& pair) {
  require_pair_grid(pair.grid(), "pair_velocity_fourier");
  if (pair.grid().kind() != CoordinateKind::PositionVelocity)
    throw std::invalid_argument("pair_velocity_fourier: PositionVelocity input");
  const std::array<std::size_t, 2> axes{1, 3};
  return velocity_fourier_axes(pair, axes, CoordinateKind::PositionXi);
}

ComplexField pair_inverse_velocity_fourier(const ComplexField& pair) {
  require_pair_grid(pair.grid(), "pair_inverse_velocity_fourier");
  if (pair.grid().kind() != CoordinateKind::PositionXi)
    throw std::invalid_argument("pair_inverse_velocity_fourier: PositionXi input");
  const std::array<std::size_t, 2> axes{1, 3};
  return inverse_velocity_fourier_axes(pair, axes,
                                       CoordinateKind::PositionVelocity);
}

namespace {

// Phase of the symmetrized interaction V(z1 - z2) = -Gamma'(x1 - x2)
// (xi1 - xi2) over a time span s. On the uniform xi axis the phase splits as
// exp(i theta (j - l)) = w^j conj(w^l), so one power table per (x1, x2) row
// covers the whole phase factor with contiguous accesses.
std::vector<Complex> interaction_table(const PhaseGrid& grid,
                                       const PotentialSpec& spec, double s) {
  const auto shape = pair_shape(grid);
  const Axis& ax = grid.axis(0);
  const Axis& axi = grid.axis(1);
  std::vector<Complex> table(shape[0] * shape[2] * shape[1]);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t k = 0; k < shape[2]; ++k) {
      const double g =
          eval_derivative(spec, ax.coordinate(i) - ax.coordinate(k), 1);
      Complex* row = table.data() + (i * shape[2] + k) * shape[1];
      for (std::size_t m = 0; m < shape[1]; ++m) {
        const double theta = s * g * axi.spacing() * static_cast<double>(m);
        row[m] = Complex{std::cos(theta), std::sin(theta)};
      }
    }
  return table;
}

// Particle-1 block carries the inverse-transform normalization so the
// backward passes can skip their scaling sweep.
std::vector<Complex> kinetic_table(const PhaseGrid& grid, double s,
                                   double scale) {
  const auto shape = pair_shape(grid);
  const Axis& ax = grid.axis(0);
  const Axis& axi = grid.axis(1);
  std::vector<Complex> table(2 * shape[0] * shape[1]);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const double theta = ax.wavenumber(i) * axi.wavenumber(j) * s;
      const Complex p{std::cos(theta), std::sin(theta)};
      table[i * shape[1] + j] = p * scale;
      table[shape[0] * shape[1] + i * shape[1] + j] = p;
    }
  return table;
}

// In-place rank-2 transforms over one particle-2 block line, planned on the
// work buffer before it is loaded. Single-line transforms keep each 64 KB-ish
// line resident in private cache across the whole phase sequence.
struct PairSlabPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  PairSlabPlans(Complex* work, const std::array<std::size_t, 4>& shape) {
    auto* raw = reinterpret_cast<fftw_complex*>(work);
    const std::array<int, 2> dims{static_cast<int>(shape[2]),
                                  static_cast<int>(shape[3])};
    fwd = fftw_plan_dft(2, dims.data(), raw, raw, FFTW_FORWARD, FFTW_PATIENT);
    bwd = fftw_plan_dft(2, dims.data(), raw, raw, FFTW_BACKWARD, FFTW_PATIENT);
    if (fwd == nullptr || bwd == nullptr)
      throw std::runtime_error("PairSlabPlans: fftw planning failed");
  }
  PairSlabPlans(const PairSlabPlans&) = delete;
  PairSlabPlans& operator=(const PairSlabPlans&) = delete;
  ~PairSlabPlans() {
    for (fftw_plan p : {fwd, bwd})
      if (p != nullptr) fftw_destroy_plan(p);
  }
};

// Interaction phase over one cache-resident line (fixed x1 index i and xi1
// index j).
void interaction_on_line(Complex* line, const std::array<std::size_t, 4>& shape,
                         std::span<const Complex> table, std::size_t i,
                         std::size_t j) {
  for (std::size_t k = 0; k < shape[2]; ++k) {
    const Complex* row = table.data() + (i * shape[2] + k) * shape[1];
    const Complex c = row[j];
    Complex* seg = line + k * shape[3];
    for (std::size_t l = 0; l < shape[3]; ++l) seg[l] *= c * std::conj(row[l]);
  }
}

// One contiguous pass: per (x1, xi1) line, optionally multiply a leading
// interaction phase, transform the particle-2 block, multiply the kinetic
// phase (and optionally a trailing interaction phase after the inverse
// transform), all while the line stays cache-resident.
void kinetic_pass(std::span<Complex> v,
                  const std::array<std::size_t, 4>& shape,
                  const Complex* phase, const PairSlabPlans& plans,
                  std::span<const Complex> pre,
                  std::span<const Complex> interaction) {
  const std::size_t block = shape[2] * shape[3];
  for (std::size_t i = 0; i < shape[0]; ++i) {
    for (std::size_t j = 0; j < shape[1]; ++j) {
      Complex* line = v.data() + (i * shape[1] + j) * block;
      auto* line_raw = reinterpret_cast<fftw_complex*>(line);
      if (!pre.empty()) interaction_on_line(line, shape, pre, i, j);
      fftw_execute_dft(plans.fwd, line_raw, line_raw);
      for (std::size_t m = 0; m < block; ++m) line[m] *= phase[m];
      fftw_execute_dft(plans.bwd, line_raw, line_raw);
      if (!interaction.empty()) interaction_on_line(line, shape, interaction, i, j);
    }
  }
}

// Blocked in-place transpose of the square (block x block) matrix view with
// rows indexed by particle 1 and columns by particle 2.
void pair_transpose(Complex* v, std::size_t block) {
  constexpr std::size_t kBlock = 64;
  for (std::size_t rb = 0; rb < block; rb += kBlock) {
    const std::size_t re = std::min(rb + kBlock, block);
    for (std::size_t r = rb; r < re; ++r)
      for (std::size_t c = r + 1; c < re; ++c)
        std::swap(v[r * block + c], v[c * block + r]);
    for (std::size_t cb = rb + kBlock; cb < block; cb += kBlock) {
      const std::size_t ce = std::min(cb + kBlock, block);
      for (std::size_t r = rb; r < re; ++r)
        for (std::size_t c = cb; c < ce; ++c)
          std::swap(v[r * block + c], v[c * block + r]);
    }
  }
}

// Two row passes fused into one traversal: completes the current step's
// second kinetic transform (scaled table), applies the merged interaction
// phase of the step boundary, and opens the next step's first kinetic
// transform (unscaled table) while each line is cache-resident. Valid
// because consecutive Strang steps put these two row passes adjacent in the
// operator sequence, separated only by the diagonal interaction phase.
void kinetic_megapass(std::span<Complex> v,
                      const std::array<std::size_t, 4>& shape,
                      const Complex* phase_scaled, const Complex* phase_unscaled,
                      const PairSlabPlans& plans, std::span<const Complex> mid) {
  const std::size_t block = shape[2] * shape[3];
  for (std::size_t i = 0; i < shape[0]; ++i) {
    for (std::size_t j = 0; j < shape[1]; ++j) {
      Complex* line = v.data() + (i * shape[1] + j) * block;
      auto* line_raw = reinterpret_cast<fftw_complex*>(line);
      fftw_execute_dft(plans.fwd, line_raw, line_raw);
      for (std::size_t m = 0; m < block; ++m) line[m] *= phase_scaled[m];
      fftw_execute_dft(plans.bwd, line_raw, line_raw);
      interaction_on_line(line, shape, mid, i, j);
      fftw_execute_dft(plans.fwd, line_raw, line_raw);
      for (std::size_t m = 0; m < block; ++m) line[m] *= phase_unscaled[m];
      fftw_execute_dft(plans.bwd, line_raw, line_raw);
    }
  }
}

}  // namespace

PairTrajectory solve_pseudo_schrodinger_pair(const ComplexField& initial,
                                             const PotentialSpec& spec,
                                             double T,
                                             const SolverParams& params,
                                             std::size_t memory_budget_bytes) {
  PairTrajectory out;
  solve_pseudo_schrodinger_pair_stream(
      initial, spec, T, params,
      [&](double t, std::span<const Complex> v) {
        out.times.push_back(t);
        out.states.emplace_back(initial.grid(),
                                std::vector<Complex>(v.begin(), v.end()));
      },
      memory_budget_bytes);
  return out;
}

void solve_pseudo_schrodinger_pair_stream(
    const ComplexField& initial, const PotentialSpec& spec, double T,
    const SolverParams& params,
    const std::function<void(double, std::span<const Complex>)>& observe,
    std::size_t memory_budget_bytes) {
  require_pair_grid(initial.grid(), "solve_pseudo_schrodinger_pair");
  if (initial.grid().kind() != CoordinateKind::PositionXi)
    throw std::invalid_argument(
        "solve_pseudo_schrodinger_pair: PositionXi pair grid required");
  const PhaseGrid& grid = initial.grid();
  if (grid.point_count() * sizeof(Complex) * 2 > memory_budget_bytes)
    throw std::invalid_argument(
        "solve_pseudo_schrodinger_pair: grid exceeds the memory budget");
  if (pair_swap_asymmetry(initial) > 1e-8)
    throw std::invalid_argument(
        "solve_pseudo_schrodinger_pair: initial state must be swap symmetric");

  if (!(params.dt > 0.0))
    throw std::invalid_argument("solve_pseudo_schrodinger_pair: dt > 0");
  std::size_t steps =
      T == 0.0 ? 0
               : static_cast<std::size_t>(
                     std::ceil(std::abs(T) / params.dt - 1e-9));
  const double direction = T < 0.0 ? -1.0 : 1.0;

  observe(0.0, initial.values());
  const std::size_t total = initial.values().size();
  // 2 MB-aligned so the whole buffer can be backed by transparent huge
  // pages; the per-step passes stride the array at 64 KB and TLB misses on
  // 4 KB pages dominate their runtime otherwise.
  constexpr std::size_t kHugeAlign = std::size_t{1} << 21;
  const std::size_t bytes =
      (sizeof(Complex) * total + kHugeAlign - 1) / kHugeAlign * kHugeAlign;
  const std::unique_ptr<Complex, decltype(&std::free)> work_owner(
      static_cast<Complex*>(std::aligned_alloc(kHugeAlign, bytes)), &std::free);
  if (!work_owner)
    throw std::bad_alloc();
#ifdef __linux__
  madvise(work_owner.get(), bytes, MADV_HUGEPAGE);
#endif
  const std::span<Complex> work(work_owner.get(), total);
  const PairSlabPlans plans(work.data(), pair_shape(grid));
  std::copy(initial.values().begin(), initial.values().end(), work.begin());

  const double h_full = direction * params.dt;
  const std::vector<Complex> int_half =
      interaction_table(grid, spec, 0.5 * h_full);
  const std::vector<Complex> int_full = interaction_table(grid, spec, h_full);
  const double inv_total = 1.0 / static_cast<double>(initial.values().size());
  const std::vector<Complex> kin_full = kinetic_table(grid, h_full, inv_total);
  const std::size_t stride = params.snapshot_stride ? params.snapshot_stride : 1;
  const auto wants_snapshot = [&](std::size_t step) {
    if (!params.snapshot_steps.empty())
      return std::binary_search(params.snapshot_steps.begin(),
                                params.snapshot_steps.end(), step);
    return step % stride == 0;
  };

  const auto shape = pair_shape(grid);
  const std::size_t block = shape[2] * shape[3];
  const Complex* kin_scaled = kin_full.data();
  const Complex* kin_plain = kin_full.data() + shape[0] * shape[1];

  double t = 0.0;
  // Each Strang step is (row pass) (transpose) (row pass): the one-particle
  // kinetic operator over the contiguous particle-2 axes, a transpose of the
  // particle blocks, and the same operator over the (now contiguous)
  // particle-1 axes — exact for swap-symmetric states with no transpose
  // back, since the completed step is symmetric again. Interaction
  // half-phases are fused into the passes, adjacent half-phases between
  // unsampled regular steps are merged into one full phase, and the trailing
  // pass of one step is fused with the leading pass of the next into a
  // single traversal (kinetic_megapass); `opened` marks that the next step's
  // leading pass has already been applied.
  bool opened = false;
  for (std::size_t k = 0; k < steps; ++k) {
    const double h =
        direction * std::min(params.dt, std::abs(T) - std::abs(t));
    const bool regular = std::abs(h - h_full) <= 1e-12 * params.dt;
    const bool snapshot = (k + 1 == steps) || wants_snapshot(k + 1);
    const double h_next =
        direction * std::min(params.dt, std::abs(T) - std::abs(t + h));
    const bool next_regular =
        (k + 1 < steps) && std::abs(h_next - h_full) <= 1e-12 * params.dt;
    if (regular) {
      if (!opened) kinetic_pass(work, shape, kin_plain, plans, int_half, {});
      pair_transpose(work.data(), block);
      const bool merge = !snapshot && next_regular;
      if (merge) {
        kinetic_megapass(work, shape, kin_scaled, kin_plain, plans, int_full);
      } else {
        kinetic_pass(work, shape, kin_scaled, plans, {}, int_half);
      }
      opened = merge;
    } else {
      const std::vector<Complex> ih = interaction_table(grid, spec, 0.5 * h);
      const std::vector<Complex> kh = kinetic_table(grid, h, inv_total);
      kinetic_pass(work, shape, kh.data() + shape[0] * shape[1], plans, ih, {});
      pair_transpose(work.data(), block);
      kinetic_pass(work, shape, kh.data(), plans, {}, ih);
      opened = false;
    }
    t += h;
    if (snapshot) observe(t, work);
  }
}

MfcResiduals mfc_residuals(const PotentialSpec& spec, const ComplexField& state,
                           std::size_t n_formal) {
  require_pair_grid(state.grid(), "mfc_residuals");
  if (state.grid().kind() != CoordinateKind::PositionVelocity)
    throw std::invalid_argument("mfc_residuals: PositionVelocity pair field");
  if (n_formal < 2) throw std::invalid_argument("mfc_residuals: need N >= 2");

  const PhaseGrid& grid = state.grid();
  const double coupling = 1.0 / static_cast<double>(n_formal - 1);
  const BoundParams bp = BoundParams::from_potential(spec, 1.0, 1);

  const ComplexField dx1 = spectral_derivative(state, 0);
  const ComplexField dv1 = spectral_derivative(state, 1);
  const ComplexField dx2 = spectral_derivative(state, 2);
  const ComplexField dv2 = spectral_derivative(state, 3);

  const auto field_norm = [&](const ComplexField& f) { return f.l2_norm(); };

  // Gamma'' and Gamma''' sampled over (x1, x2).
  const Axis& ax = grid.axis(0);
  const auto shape = pair_shape(grid);
  std::vector<double> g2(shape[0] * shape[2]), g3(shape[0] * shape[2]);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t k = 0; k < shape[2]; ++k) {
      const double x = ax.coordinate(i) - ax.coordinate(k);
      g2[i * shape[2] + k] = eval_derivative(spec, x, 2);
      g3[i * shape[2] + k] = eval_derivative(spec, x, 3);
    }
  const auto weighted_vdiff_norm = [&](std::span<const double> table,
                                       const ComplexField& a,
                                       const ComplexField& b) {
    // || table(x1, x2) (a - b) ||_2 with a, b the two v-derivative fields.
    std::vector<double> sq(grid.point_count());
    for (std::size_t i = 0; i < shape[0]; ++i)
      for (std::size_t j = 0; j < shape[1]; ++j)
        for (std::size_t k = 0; k < shape[2]; ++k) {
          const double w = table[i * shape[2] + k];
          const std::size_t base = ((i * shape[1] + j) * shape[2] + k) * shape[3];
          for (std::size_t l = 0; l < shape[3]; ++l)
            sq[base + l] = w * w * std::norm(a[base + l] - b[base + l]);
        }
    return std::sqrt(pairwise_sum(sq) * grid.cell_volume());
  };

  const double grad_z1 = std::hypot(field_norm(dx1), field_norm(dv1));

  // {grad_z1 H, state}: the v1 component is -dx1, the x1 component couples
  // Gamma'' against (dv1 - dv2).
  const double bracket_x1 =
      coupling * weighted_vdiff_norm(g2, dv1, dv2);
  const double lhs1 = std::hypot(field_norm(dx1), bracket_x1);
  const double rhs1 = bp.c1 * grad_z1;

  // Second derivatives of H in the position block give the only nonzero
  // brackets: four entries, each +-Gamma'' -> +-Gamma''' (dv1 - dv2).
  const double lhs2 = 2.0 * coupling * weighted_vdiff_norm(g3, dv1, dv2);
  const double rhs2 = bp.c2 * grad_z1;

  // {grad_(z1,z2) H, grad_(z1,z2) state}: v rows give -dx dA, x rows couple
  // Gamma'' against (dv1 - dv2) of each first derivative.
  double lhs3_sq = 0.0;
  double d2_sq = 0.0;
  const std::array<const ComplexField*, 4> firsts{&dx1, &dv1, &dx2, &dv2};
  for (const ComplexField* f : firsts) {
    const ComplexField fx1 = spectral_derivative(*f, 0);
    const ComplexField fv1 = spectral_derivative(*f, 1);
    const ComplexField fx2 = spectral_derivative(*f, 2);
    const ComplexField fv2 = spectral_derivative(*f, 3);
    const double cross = coupling * weighted_vdiff_norm(g2, fv1, fv2);
    lhs3_sq += 2.0 * cross * cross;
    lhs3_sq += std::pow(field_norm(fx1), 2) + std::pow(field_norm(fx2), 2);
    d2_sq += std::pow(field_norm(fx1), 2) + std::pow(field_norm(fv1), 2) +
             std::pow(field_norm(fx2), 2) + std::pow(field_norm(fv2), 2);
  }
  const double lhs3 = std::sqrt(lhs3_sq);
  const double rhs3 = bp.c3 * std::sqrt(d2_sq);

  return MfcResiduals{rhs1 - lhs1, rhs2 - lhs2, rhs3 - lhs3};
}

}  // namespace hvlab
