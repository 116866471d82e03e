#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hvlab/grid.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("axis coordinates are uniform on the half-open box") {
  const Axis ax{16, kPi};
  CHECK(ax.spacing() == doctest::Approx(2.0 * kPi / 16.0));
  CHECK(ax.coordinate(0) == doctest::Approx(-kPi));
  CHECK(ax.coordinate(8) == doctest::Approx(0.0));
  CHECK(ax.coordinate(15) == doctest::Approx(kPi - ax.spacing()));
}

TEST_CASE("axis wavenumbers cover the symmetric band") {
  const Axis ax{8, kPi};
  CHECK(ax.wavenumber(0) == doctest::Approx(0.0));
  CHECK(ax.wavenumber(1) == doctest::Approx(1.0));
  CHECK(ax.wavenumber(3) == doctest::Approx(3.0));
  CHECK(ax.wavenumber(4) == doctest::Approx(-4.0));
  CHECK(ax.wavenumber(7) == doctest::Approx(-1.0));
}

TEST_CASE("grid bookkeeping is consistent") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 32, kPi, 16, 2.0);
  CHECK(grid.dim() == 1);
  CHECK(grid.axis_count() == 2);
  CHECK(grid.point_count() == 32 * 16);
  CHECK(grid.stride(0) == 16);
  CHECK(grid.stride(1) == 1);
  // total quadrature weight equals the box volume
  CHECK(grid.cell_volume() * static_cast<double>(grid.point_count()) ==
        doctest::Approx(2.0 * kPi * 4.0).epsilon(1e-12));
}

TEST_CASE("grid equality compares kind and axes") {
  const auto a =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 32, kPi, 32, kPi);
  const auto b =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 32, kPi, 32, kPi);
  const auto c =
      PhaseGrid::make1d(CoordinateKind::PositionXi, 32, kPi, 32, kPi);
  const auto d =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 16, kPi, 32, kPi);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
}

TEST_CASE("field value count must match the grid") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 8, kPi, 8, kPi);
  CHECK_THROWS_AS(ComplexField(grid, std::vector<Complex>(7)),
                  std::invalid_argument);
}

TEST_CASE("field norm is the quadrature L2 norm") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 16, kPi, 16, kPi);
  std::vector<Complex> values(grid.point_count(), Complex{1.0, 0.0});
  const ComplexField field(grid, values);
  CHECK(field.l2_norm() == doctest::Approx(2.0 * kPi).epsilon(1e-12));

  const ComplexField unit = field.normalized();
  CHECK(unit.l2_norm() == doctest::Approx(1.0).epsilon(1e-12));
}
