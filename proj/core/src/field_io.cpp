#include "hvlab/field_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hvlab {
namespace {

constexpr char kMagic[4] = {'H', 'V', 'L', 'F'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("snapshot: truncated stream");
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const ComplexField& field, bool pair) {
  const PhaseGrid& g = field.grid();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(pair ? g.dim() / 2 : g.dim()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(g.kind()));
  put<std::uint8_t>(out, pair ? 1 : 0);
  put<std::uint16_t>(out, 0);
  for (std::size_t a = 0; a < g.axis_count(); ++a)
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.axis(a).n));
  for (std::size_t a = 0; a < g.axis_count(); ++a) put<double>(out, g.axis(a).halfwidth);
  for (const Complex& c : field.values()) {
    put<double>(out, c.real());
    put<double>(out, c.imag());
  }
}

void write_snapshot_file(const std::string& path, const ComplexField& field, bool pair) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  write_snapshot(out, field, pair);
}

SnapshotHeader read_snapshot_header(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("snapshot: bad magic");
  SnapshotHeader h;
  h.version = get<std::uint32_t>(in);
  if (h.version != 1) throw std::runtime_error("snapshot: unsupported version");
  h.dim = get<std::uint32_t>(in);
  h.kind = static_cast<CoordinateKind>(get<std::uint8_t>(in));
  h.pair = get<std::uint8_t>(in) != 0;
  get<std::uint16_t>(in);
  std::size_t axes = 2 * static_cast<std::size_t>(h.dim) * (h.pair ? 2 : 1);
  for (std::size_t a = 0; a < axes; ++a) h.counts.push_back(get<std::uint32_t>(in));
  for (std::size_t a = 0; a < axes; ++a) h.extents.push_back(get<double>(in));
  return h;
}

ComplexField read_snapshot(std::istream& in) {
  SnapshotHeader h = read_snapshot_header(in);
  std::vector<Axis> axes;
  std::size_t total = 1;
  for (std::size_t a = 0; a < h.counts.size(); ++a) {
    axes.push_back(Axis{h.counts[a], h.extents[a]});
    total *= h.counts[a];
  }
  std::vector<Complex> values(total);
  for (auto& c : values) {
    double re = get<double>(in);
    double im = get<double>(in);
    c = Complex{re, im};
  }
  return ComplexField(PhaseGrid(h.kind, std::move(axes)), std::move(values));
}

ComplexField read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  return read_snapshot(in);
}

SnapshotHeader read_snapshot_header_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  return read_snapshot_header(in);
}

}  // namespace hvlab
