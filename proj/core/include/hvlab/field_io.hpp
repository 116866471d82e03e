#pragma once

#include <iosfwd>
#include <string>

#include "hvlab/grid.hpp"

namespace hvlab {

// Binary snapshot format, little-endian:
//   bytes 0..3   magic "HVLF"
//   bytes 4..7   version (u32, currently 1)
//   bytes 8..11  d (u32, physical dimension; a pair snapshot stores 2d here
//                with the pair flag set)
//   byte  12     coordinate_kind (u8)
//   byte  13     pair flag (u8): 1 when the field is a two-particle state
//   bytes 14..15 zero padding
//   per axis: point count (u32)
//   per axis: extent halfwidth (f64)
// followed by row-major interleaved (re, im) f64 pairs.
struct SnapshotHeader {
  std::uint32_t version = 1;
  std::uint32_t dim = 0;
  CoordinateKind kind = CoordinateKind::PositionVelocity;
  bool pair = false;
  std::vector<std::uint32_t> counts;
  std::vector<double> extents;
};

void write_snapshot(std::ostream& out, const ComplexField& field, bool pair = false);
void write_snapshot_file(const std::string& path, const ComplexField& field,
                         bool pair = false);

SnapshotHeader read_snapshot_header(std::istream& in);
ComplexField read_snapshot(std::istream& in);
ComplexField read_snapshot_file(const std::string& path);
SnapshotHeader read_snapshot_header_file(const std::string& path);

}  // namespace hvlab
