#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hvlab {

using Complex = std::complex<double>;

// Which pair of conjugate coordinates the second block of axes carries.
enum class CoordinateKind : uint8_t {
  PositionVelocity = 0,
  PositionXi = 1,
};

// One periodic axis: n uniformly spaced points on [-halfwidth, halfwidth).
struct Axis {
  std::size_t n = 0;
  double halfwidth = 0.0;

  double spacing() const { return 2.0 * halfwidth / static_cast<double>(n); }
  double coordinate(std::size_t i) const {
    return -halfwidth + static_cast<double>(i) * spacing();
  }
  // Angular wavenumber of FFT bin i, mapped to [-n/2, n/2).
  double wavenumber(std::size_t i) const {
    auto j = static_cast<std::ptrdiff_t>(i);
    auto half = static_cast<std::ptrdiff_t>(n / 2);
    if (j >= half) j -= static_cast<std::ptrdiff_t>(n);
    return static_cast<double>(j) * 3.14159265358979323846 / halfwidth;
  }
};

// Periodic discretization of the one-particle phase space: d position axes
// followed by d velocity (or xi) axes, row-major storage order.
class PhaseGrid {
 public:
  PhaseGrid() = default;
  PhaseGrid(CoordinateKind kind, std::vector<Axis> axes);

  // d=1 convenience: n_x x n_v grid on [-L,L) x [-L2,L2).
  static PhaseGrid make1d(CoordinateKind kind, std::size_t n_x, double length_x,
                          std::size_t n_v, double length_v);

  CoordinateKind kind() const { return kind_; }
  std::size_t dim() const { return axes_.size() / 2; }
  std::size_t axis_count() const { return axes_.size(); }
  const Axis& axis(std::size_t a) const { return axes_[a]; }
  std::span<const Axis> axes() const { return axes_; }

  std::size_t point_count() const { return point_count_; }
  // Quadrature weight of a single grid cell.
  double cell_volume() const { return cell_volume_; }

  // Row-major stride of axis a.
  std::size_t stride(std::size_t a) const;

  bool operator==(const PhaseGrid& other) const;
  bool operator!=(const PhaseGrid& other) const { return !(*this == other); }

 private:
  CoordinateKind kind_ = CoordinateKind::PositionVelocity;
  std::vector<Axis> axes_;
  std::size_t point_count_ = 0;
  double cell_volume_ = 0.0;
};

// Immutable-by-convention complex field over a PhaseGrid.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(PhaseGrid grid, std::vector<Complex> values);
  explicit ComplexField(PhaseGrid grid)
      : ComplexField(std::move(grid), {}) {}

  const PhaseGrid& grid() const { return grid_; }
  std::span<const Complex> values() const { return values_; }
  std::span<Complex> mutable_values() { return values_; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }

  double l2_norm() const;
  // Returns a rescaled copy with unit L2 norm.
  ComplexField normalized() const;

 private:
  PhaseGrid grid_;
  std::vector<Complex> values_;
};

// Deterministic pairwise reduction; independent of chunking used elsewhere.
double pairwise_sum(std::span<const double> x);

}  // namespace hvlab
