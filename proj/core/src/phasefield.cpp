#include "hvlab/phasefield.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hvlab/fft.hpp"

namespace hvlab {
namespace {

std::vector<std::size_t> shape_of(const PhaseGrid& grid) {
  std::vector<std::size_t> shape(grid.axis_count());
  for (std::size_t a = 0; a < shape.size(); ++a) shape[a] = grid.axis(a).n;
  return shape;
}

// Apply a per-index factor along one axis of a row-major array.
template <typename F>
void scale_axis(std::vector<Complex>& v, std::span<const std::size_t> shape,
                std::size_t axis, F&& factor) {
  std::size_t n = shape[axis];
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) stride *= shape[a];
  std::size_t outer = v.size() / (n * stride);
  std::vector<Complex> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = factor(i);
  for (std::size_t o = 0; o < outer; ++o) {
    Complex* block = v.data() + o * n * stride;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = 0; s < stride; ++s) block[i * stride + s] *= f[i];
  }
}

}  // namespace

ComplexField velocity_fourier(const ComplexField& field) {
  const PhaseGrid& g = field.grid();
  if (g.kind() != CoordinateKind::PositionVelocity)
    throw std::invalid_argument("velocity_fourier: input must be a PositionVelocity field");
  std::vector<std::size_t> targets;
  for (std::size_t a = g.dim(); a < g.axis_count(); ++a) targets.push_back(a);
  return velocity_fourier_axes(field, targets, CoordinateKind::PositionXi);
}

ComplexField velocity_fourier_axes(const ComplexField& field,
                                   std::span<const std::size_t> target_axes,
                                   CoordinateKind result_kind) {
  const PhaseGrid& g = field.grid();
  auto shape = shape_of(g);
  std::vector<Complex> v(field.values().begin(), field.values().end());
  std::vector<Axis> axes(g.axes().begin(), g.axes().end());

  for (std::size_t a : target_axes) {
    const Axis ax = axes[a];
    double dv = ax.spacing();
    double dxi = std::numbers::pi / ax.halfwidth;
    double xi_half = 0.5 * static_cast<double>(ax.n) * dxi;
    // alpha_hat_m = dv/sqrt(2 pi) e^{i L_v xi_m} FFT[alpha_j (-1)^j]_m
    // with xi_m = (m - n/2) dxi in natural order.
    scale_axis(v, shape, a, [](std::size_t j) {
      return (j % 2 == 0) ? Complex{1.0, 0.0} : Complex{-1.0, 0.0};
    });
    fft::transform_axis(v.data(), shape, a, -1);
    double scale = dv / std::sqrt(2.0 * std::numbers::pi);
    scale_axis(v, shape, a, [&](std::size_t m) {
      double xi = (static_cast<double>(m) - 0.5 * static_cast<double>(ax.n)) * dxi;
      return scale * std::polar(1.0, ax.halfwidth * xi);
    });
    axes[a] = Axis{ax.n, xi_half};
  }
  return ComplexField(PhaseGrid(result_kind, std::move(axes)), std::move(v));
}

ComplexField inverse_velocity_fourier(const ComplexField& field) {
  const PhaseGrid& g = field.grid();
  if (g.kind() != CoordinateKind::PositionXi)
    throw std::invalid_argument("inverse_velocity_fourier: input must be a PositionXi field");
  std::vector<std::size_t> targets;
  for (std::size_t a = g.dim(); a < g.axis_count(); ++a) targets.push_back(a);
  return inverse_velocity_fourier_axes(field, targets,
                                       CoordinateKind::PositionVelocity);
}

ComplexField inverse_velocity_fourier_axes(const ComplexField& field,
                                           std::span<const std::size_t> target_axes,
                                           CoordinateKind result_kind) {
  const PhaseGrid& g = field.grid();
  auto shape = shape_of(g);
  std::vector<Complex> v(field.values().begin(), field.values().end());
  std::vector<Axis> axes(g.axes().begin(), g.axes().end());

  for (std::size_t a : target_axes) {
    const Axis ax = axes[a];
    double dxi = ax.spacing();
    double v_half = 0.5 * static_cast<double>(ax.n) * std::numbers::pi / ax.halfwidth;
    scale_axis(v, shape, a, [&](std::size_t m) {
      double xi = ax.coordinate(m);
      return std::polar(1.0, -v_half * xi);
    });
    fft::transform_axis(v.data(), shape, a, +1);
    double scale = dxi / std::sqrt(2.0 * std::numbers::pi);
    scale_axis(v, shape, a, [&](std::size_t j) {
      return (j % 2 == 0) ? Complex{scale, 0.0} : Complex{-scale, 0.0};
    });
    axes[a] = Axis{ax.n, v_half};
  }
  return ComplexField(PhaseGrid(result_kind, std::move(axes)), std::move(v));
}

SpectralInterpolant::SpectralInterpolant(const ComplexField& field)
    : grid_(field.grid()),
      coeffs_(field.values().begin(), field.values().end()) {
  auto shape = shape_of(grid_);
  fft::forward_all(coeffs_.data(), shape);
  const double scale = 1.0 / static_cast<double>(grid_.point_count());
  for (auto& c : coeffs_) c *= scale;
}

Complex SpectralInterpolant::operator()(std::span<const double> coords) const {
  const std::size_t rank = grid_.axis_count();
  if (coords.size() != rank)
    throw std::invalid_argument("SpectralInterpolant: coordinate count mismatch");
  // Per-axis phase tables e^{i k (x + L)}; the reconstruction is their outer
  // product against the normalized FFT coefficients.
  std::vector<std::vector<Complex>> phases(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    const Axis& ax = grid_.axis(a);
    phases[a].resize(ax.n);
    const double shifted = coords[a] + ax.halfwidth;
    for (std::size_t i = 0; i < ax.n; ++i) {
      const double theta = ax.wavenumber(i) * shifted;
      phases[a][i] = Complex{std::cos(theta), std::sin(theta)};
    }
  }
  std::vector<std::size_t> idx(rank, 0);
  auto shape = shape_of(grid_);
  Complex sum{0.0, 0.0};
  if (rank == 2) {
    const std::size_t n1 = shape[1];
    for (std::size_t i = 0; i < shape[0]; ++i) {
      Complex row{0.0, 0.0};
      const Complex* c = coeffs_.data() + i * n1;
      for (std::size_t j = 0; j < n1; ++j) row += c[j] * phases[1][j];
      sum += row * phases[0][i];
    }
    return sum;
  }
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    Complex term = coeffs_[p];
    for (std::size_t a = 0; a < rank; ++a) term *= phases[a][idx[a]];
    sum += term;
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return sum;
}

ComplexField spectral_derivative(const ComplexField& field, std::size_t axis) {
  const PhaseGrid& g = field.grid();
  if (axis >= g.axis_count()) throw std::invalid_argument("spectral_derivative: bad axis");
  auto shape = shape_of(g);
  std::vector<Complex> v(field.values().begin(), field.values().end());
  const Axis& ax = g.axis(axis);
  fft::transform_axis(v.data(), shape, axis, -1);
  double scale = 1.0 / static_cast<double>(ax.n);
  scale_axis(v, shape, axis, [&](std::size_t i) {
    // Zero the Nyquist bin: the odd-order derivative of its real mode.
    if (i == ax.n / 2) return Complex{0.0, 0.0};
    return Complex{0.0, ax.wavenumber(i) * scale};
  });
  fft::transform_axis(v.data(), shape, axis, +1);
  return ComplexField(g, std::move(v));
}

namespace {

// The conjugate-coordinate "derivative": spectral on PositionVelocity grids,
// pointwise |xi-coordinate| multiplication on PositionXi grids.
ComplexField velocity_block_derivative(const ComplexField& field, std::size_t axis) {
  const PhaseGrid& g = field.grid();
  if (g.kind() == CoordinateKind::PositionVelocity || axis < g.dim())
    return spectral_derivative(field, axis);
  auto shape = shape_of(g);
  std::vector<Complex> v(field.values().begin(), field.values().end());
  const Axis& ax = g.axis(axis);
  scale_axis(v, shape, axis, [&](std::size_t i) { return Complex{ax.coordinate(i), 0.0}; });
  return ComplexField(g, std::move(v));
}

}  // namespace

double sobolev_norm(const ComplexField& field, int k) {
  if (k < 0 || k > 2) throw std::invalid_argument("sobolev_norm: order must be 0..2");
  double total = field.l2_norm();
  total *= total;
  if (k >= 1) {
    for (std::size_t a = 0; a < field.grid().axis_count(); ++a) {
      double d = velocity_block_derivative(field, a).l2_norm();
      total += d * d;
    }
  }
  if (k == 2) {
    double d2 = second_derivative_norm(field);
    total += d2 * d2;
  }
  return std::sqrt(total);
}

double second_derivative_norm(const ComplexField& field) {
  double total = 0.0;
  for (std::size_t a = 0; a < field.grid().axis_count(); ++a) {
    ComplexField da = velocity_block_derivative(field, a);
    for (std::size_t b = 0; b < field.grid().axis_count(); ++b) {
      double d = velocity_block_derivative(da, b).l2_norm();
      total += d * d;
    }
  }
  return std::sqrt(total);
}

ComplexField poisson_bracket(const ComplexField& a, const ComplexField& b) {
  if (a.grid() != b.grid()) throw std::invalid_argument("poisson_bracket: grid mismatch");
  if (a.grid().kind() != CoordinateKind::PositionVelocity)
    throw std::invalid_argument("poisson_bracket: needs PositionVelocity fields");
  std::size_t d = a.grid().dim();
  std::vector<Complex> out(a.grid().point_count(), Complex{0.0, 0.0});
  for (std::size_t i = 0; i < d; ++i) {
    ComplexField ax = spectral_derivative(a, i);
    ComplexField av = spectral_derivative(a, d + i);
    ComplexField bx = spectral_derivative(b, i);
    ComplexField bv = spectral_derivative(b, d + i);
    for (std::size_t p = 0; p < out.size(); ++p)
      out[p] += ax[p] * bv[p] - av[p] * bx[p];
  }
  return ComplexField(a.grid(), std::move(out));
}

ComplexField random_state(std::uint64_t seed, const PhaseGrid& grid, int smoothness) {
  if (smoothness < 0) throw std::invalid_argument("random_state: smoothness must be >= 0");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    // 53-bit uniform in (0, 1]; explicit so results do not depend on the
    // standard library's distribution implementation.
    return (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;
  };
  auto shape = shape_of(grid);
  std::vector<Complex> spec(grid.point_count());
  std::vector<std::size_t> idx(grid.axis_count(), 0);
  for (std::size_t p = 0; p < spec.size(); ++p) {
    double k2 = 0.0;
    for (std::size_t a = 0; a < grid.axis_count(); ++a) {
      double w = grid.axis(a).wavenumber(idx[a]);
      k2 += w * w;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    Complex gauss{r * std::cos(2.0 * std::numbers::pi * u2),
                  r * std::sin(2.0 * std::numbers::pi * u2)};
    spec[p] = gauss / std::pow(1.0 + std::sqrt(k2), static_cast<double>(smoothness));
    for (std::size_t a = grid.axis_count(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  fft::backward_all(spec.data(), shape);
  return ComplexField(grid, std::move(spec)).normalized();
}

}  // namespace hvlab
