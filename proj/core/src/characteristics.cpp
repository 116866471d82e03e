#include "hvlab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hvlab/fft.hpp"

namespace hvlab {

namespace {

std::vector<double> accelerations(const PotentialSpec& spec,
                                  std::span<const double> positions) {
  const std::size_t n = positions.size();
  std::vector<double> acc(n, 0.0);
  if (n < 2) return acc;
  const double coupling = 1.0 / static_cast<double>(n - 1);
  for (std::size_t m = 0; m < n; ++m) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == m) continue;
      sum += eval_derivative(spec, positions[k] - positions[m], 1);
    }
    acc[m] = coupling * sum;
  }
  return acc;
}

std::vector<Complex> slice_coefficients(std::span<const Complex> values) {
  std::vector<Complex> coeffs(values.begin(), values.end());
  const std::size_t shape[1] = {coeffs.size()};
  fft::transform_axis(coeffs.data(), shape, 0, -1);
  const double scale = 1.0 / static_cast<double>(coeffs.size());
  for (auto& c : coeffs) c *= scale;
  return coeffs;
}

}  // namespace

double wrap_position(double x, double halfwidth) {
  const double period = 2.0 * halfwidth;
  double y = std::fmod(x + halfwidth, period);
  if (y < 0.0) y += period;
  return y - halfwidth;
}

double nbody_energy(const PotentialSpec& spec, const NBodyState& state) {
  const std::size_t n = state.count();
  double kinetic = 0.0;
  for (double v : state.velocities) kinetic += 0.5 * v * v;
  if (n < 2) return kinetic;
  double interaction = 0.0;
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = 0; k < n; ++k) {
      if (k == m) continue;
      interaction += eval_derivative(spec, state.positions[m] - state.positions[k], 0);
    }
  return kinetic + interaction / (2.0 * static_cast<double>(n - 1));
}

NBodyState flow_nbody(const PotentialSpec& spec, const NBodyState& state,
                      double t1, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("flow_nbody: dt must be positive");
  if (state.positions.size() != state.velocities.size())
    throw std::invalid_argument("flow_nbody: positions/velocities length mismatch");

  NBodyState out = state;
  const double total = t1 - state.time;
  const double direction = total < 0.0 ? -1.0 : 1.0;
  double remaining = std::abs(total);

  std::vector<double> acc = accelerations(spec, out.positions);
  while (remaining > 0.0) {
    const double h = direction * std::min(dt, remaining);
    for (std::size_t m = 0; m < out.count(); ++m)
      out.velocities[m] += 0.5 * h * acc[m];
    for (std::size_t m = 0; m < out.count(); ++m)
      out.positions[m] += h * out.velocities[m];
    acc = accelerations(spec, out.positions);
    for (std::size_t m = 0; m < out.count(); ++m)
      out.velocities[m] += 0.5 * h * acc[m];
    remaining -= std::abs(h);
  }
  for (auto& x : out.positions) x = wrap_position(x, spec.box_halfwidth);
  out.time = t1;
  return out;
}

FieldHistory::FieldHistory(Axis axis, std::vector<double> times,
                           std::vector<std::vector<double>> force_slices,
                           std::vector<std::vector<Complex>> companion_slices)
    : axis_(axis), times_(std::move(times)) {
  if (times_.empty()) throw std::invalid_argument("FieldHistory: no time slices");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("FieldHistory: times must be strictly increasing");
  if (force_slices.size() != times_.size())
    throw std::invalid_argument("FieldHistory: one force slice per time required");
  if (!companion_slices.empty() && companion_slices.size() != times_.size())
    throw std::invalid_argument("FieldHistory: companion slice count mismatch");

  std::vector<Complex> buffer(axis_.n);
  force_coeffs_.reserve(force_slices.size());
  for (const auto& slice : force_slices) {
    if (slice.size() != axis_.n)
      throw std::invalid_argument("FieldHistory: force slice size mismatch");
    for (std::size_t j = 0; j < axis_.n; ++j) buffer[j] = slice[j];
    force_coeffs_.push_back(slice_coefficients(buffer));
  }
  companion_coeffs_.reserve(companion_slices.size());
  for (const auto& slice : companion_slices) {
    if (slice.size() != axis_.n)
      throw std::invalid_argument("FieldHistory: companion slice size mismatch");
    companion_coeffs_.push_back(slice_coefficients(slice));
  }
}

std::size_t FieldHistory::lower_slice(double t) const {
  const double span = times_.back() - times_.front();
  const double eps = 1e-9 * (span + 1.0);
  if (t < times_.front() - eps || t > times_.back() + eps)
    throw std::out_of_range("FieldHistory: time outside stored range");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  if (i > 0) --i;
  if (i + 1 >= times_.size() && times_.size() > 1) i = times_.size() - 2;
  return i;
}

Complex FieldHistory::eval_coeffs(std::span<const Complex> coeffs,
                                  double x) const {
  const double shifted = x + axis_.halfwidth;
  Complex sum{0.0, 0.0};
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double theta = axis_.wavenumber(k) * shifted;
    sum += coeffs[k] * Complex{std::cos(theta), std::sin(theta)};
  }
  return sum;
}

double FieldHistory::force(double t, double x) const {
  const std::size_t i = lower_slice(t);
  if (times_.size() == 1) return eval_coeffs(force_coeffs_[0], x).real();
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return (1.0 - w) * eval_coeffs(force_coeffs_[i], x).real() +
         w * eval_coeffs(force_coeffs_[i + 1], x).real();
}

Complex FieldHistory::companion(double t, double x) const {
  if (companion_coeffs_.empty())
    throw std::logic_error("FieldHistory: no companion field stored");
  const std::size_t i = lower_slice(t);
  if (times_.size() == 1) return eval_coeffs(companion_coeffs_[0], x);
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return (1.0 - w) * eval_coeffs(companion_coeffs_[i], x) +
         w * eval_coeffs(companion_coeffs_[i + 1], x);
}

PhasePoint flow_meanfield(const FieldHistory& history, PhasePoint z, double t0,
                          double t1, double dt) {
  if (!(dt > 0.0))
    throw std::invalid_argument("flow_meanfield: dt must be positive");
  const auto times = history.times();
  const double span = times.back() - times.front();
  const double eps = 1e-9 * (span + 1.0);
  if (std::min(t0, t1) < times.front() - eps ||
      std::max(t0, t1) > times.back() + eps)
    throw std::out_of_range("flow_meanfield: interval outside history range");

  const double direction = t1 < t0 ? -1.0 : 1.0;
  double t = t0;
  double remaining = std::abs(t1 - t0);
  while (remaining > 0.0) {
    const double h = direction * std::min(dt, remaining);
    z.v += 0.5 * h * history.force(t, z.x);
    z.x += h * z.v;
    t += h;
    z.v += 0.5 * h * history.force(t, z.x);
    remaining -= std::abs(h);
  }
  return z;
}

std::vector<double> flow_jacobian_fd(const PhaseFlow& flow, PhasePoint z,
                                     double h) {
  if (!(h > 0.0))
    throw std::invalid_argument("flow_jacobian_fd: h must be positive");
  const PhasePoint xp = flow({z.x + h, z.v});
  const PhasePoint xm = flow({z.x - h, z.v});
  const PhasePoint vp = flow({z.x, z.v + h});
  const PhasePoint vm = flow({z.x, z.v - h});
  const double inv = 1.0 / (2.0 * h);
  return {(xp.x - xm.x) * inv, (vp.x - vm.x) * inv,
          (xp.v - xm.v) * inv, (vp.v - vm.v) * inv};
}

}  // namespace hvlab
