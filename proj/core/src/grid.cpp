#include "hvlab/grid.hpp"

#include <cmath>

namespace hvlab {

PhaseGrid::PhaseGrid(CoordinateKind kind, std::vector<Axis> axes)
    : kind_(kind), axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() % 2 != 0)
    throw std::invalid_argument("PhaseGrid: need d position + d conjugate axes");
  point_count_ = 1;
  cell_volume_ = 1.0;
  for (const auto& ax : axes_) {
    if (ax.n < 8) throw std::invalid_argument("PhaseGrid: axis needs >= 8 points");
    if ((ax.n & (ax.n - 1)) != 0)
      throw std::invalid_argument("PhaseGrid: points per axis must be a power of two");
    if (!(ax.halfwidth > 0)) throw std::invalid_argument("PhaseGrid: halfwidth must be positive");
    point_count_ *= ax.n;
    cell_volume_ *= ax.spacing();
  }
}

PhaseGrid PhaseGrid::make1d(CoordinateKind kind, std::size_t n_x, double length_x,
                            std::size_t n_v, double length_v) {
  return PhaseGrid(kind, {Axis{n_x, length_x}, Axis{n_v, length_v}});
}

std::size_t PhaseGrid::stride(std::size_t a) const {
  std::size_t s = 1;
  for (std::size_t b = a + 1; b < axes_.size(); ++b) s *= axes_[b].n;
  return s;
}

bool PhaseGrid::operator==(const PhaseGrid& other) const {
  if (kind_ != other.kind_ || axes_.size() != other.axes_.size()) return false;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].n != other.axes_[a].n) return false;
    if (axes_[a].halfwidth != other.axes_[a].halfwidth) return false;
  }
  return true;
}

ComplexField::ComplexField(PhaseGrid grid, std::vector<Complex> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.empty()) values_.assign(grid_.point_count(), Complex{0.0, 0.0});
  if (values_.size() != grid_.point_count())
    throw std::invalid_argument("ComplexField: value count does not match grid");
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  std::size_t half = x.size() / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

double ComplexField::l2_norm() const {
  std::vector<double> sq(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) sq[i] = std::norm(values_[i]);
  return std::sqrt(pairwise_sum(sq) * grid_.cell_volume());
}

ComplexField ComplexField::normalized() const {
  double n = l2_norm();
  if (!(n > 0)) throw std::invalid_argument("cannot normalize a zero field");
  std::vector<Complex> v(values_.begin(), values_.end());
  for (auto& c : v) c /= n;
  return ComplexField(grid_, std::move(v));
}

}  // namespace hvlab
