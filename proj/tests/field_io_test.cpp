#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hvlab/field_io.hpp"
#include "hvlab/phasefield.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("snapshot stream round trip is exact") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionXi, 16, kPi, 32, 2.5);
  const auto field = random_state(42, grid, 1);

  std::stringstream buf;
  write_snapshot(buf, field);
  const auto back = read_snapshot(buf);

  REQUIRE(back.grid() == field.grid());
  for (std::size_t i = 0; i < grid.point_count(); ++i)
    CHECK(back[i] == field[i]);
}

TEST_CASE("snapshot header carries the grid metadata") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 8, 1.5, 16, kPi);
  const auto field = random_state(7, grid, 0);

  std::stringstream buf;
  write_snapshot(buf, field);
  const auto header = read_snapshot_header(buf);
  CHECK(header.version == 1);
  CHECK(header.dim == 1);
  CHECK(header.kind == CoordinateKind::PositionVelocity);
  CHECK_FALSE(header.pair);
  REQUIRE(header.counts.size() == 2);
  CHECK(header.counts[0] == 8);
  CHECK(header.counts[1] == 16);
  CHECK(header.extents[0] == 1.5);
  CHECK(header.extents[1] == kPi);
}

TEST_CASE("pair snapshots set the pair flag and keep the one-particle dim") {
  PhaseGrid pair(CoordinateKind::PositionXi,
                 {Axis{8, kPi}, Axis{8, kPi}, Axis{8, kPi}, Axis{8, kPi}});
  const auto field = random_state(3, pair, 0);

  std::stringstream buf;
  write_snapshot(buf, field, true);
  const auto header = read_snapshot_header(buf);
  CHECK(header.pair);
  CHECK(header.dim == 1);
  CHECK(header.counts.size() == 4);

  std::stringstream buf2;
  write_snapshot(buf2, field, true);
  const auto back = read_snapshot(buf2);
  REQUIRE(back.grid() == pair);
  for (std::size_t i = 0; i < pair.point_count(); ++i)
    CHECK(back[i] == field[i]);
}

TEST_CASE("corrupt magic is rejected") {
  std::stringstream buf("not a snapshot at all, definitely long enough");
  CHECK_THROWS_AS(read_snapshot(buf), std::runtime_error);
}

TEST_CASE("file round trip") {
  const auto grid =
      PhaseGrid::make1d(CoordinateKind::PositionVelocity, 16, kPi, 16, kPi);
  const auto field = random_state(5, grid, 2);
  const auto path =
      std::filesystem::temp_directory_path() / "hvlab_io_test.hvlf";
  write_snapshot_file(path.string(), field);
  const auto back = read_snapshot_file(path.string());
  REQUIRE(back.grid() == field.grid());
  for (std::size_t i = 0; i < grid.point_count(); ++i)
    CHECK(back[i] == field[i]);
  const auto header = read_snapshot_header_file(path.string());
  CHECK(header.counts[0] == 16);
  std::filesystem::remove(path);
}
