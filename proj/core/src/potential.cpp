#include "hvlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "hvlab/fft.hpp"

namespace hvlab {
namespace {

constexpr double kImageCutoff = 1e-15;

double gaussian_term(double u, double w, int order) {
  double g = std::exp(-u * u / (2.0 * w * w));
  double w2 = w * w;
  switch (order) {
    case 0: return g;
    case 1: return -(u / w2) * g;
    case 2: return (u * u / (w2 * w2) - 1.0 / w2) * g;
    case 3: return (-u * u * u / (w2 * w2 * w2) + 3.0 * u / (w2 * w2)) * g;
    default: return 0.0;
  }
}

double wrap_position(double x, double half) {
  double period = 2.0 * half;
  double y = std::fmod(x + half, period);
  if (y < 0) y += period;
  return y - half;
}

}  // namespace

PotentialSpec PotentialSpec::zero(double box_halfwidth) {
  return {Kind::Zero, 0.0, 1.0, 1.0, box_halfwidth};
}

PotentialSpec PotentialSpec::cosine(double amplitude, double wavenumber,
                                    double box_halfwidth) {
  return {Kind::Cosine, amplitude, wavenumber, 1.0, box_halfwidth};
}

PotentialSpec PotentialSpec::periodicized_gaussian(double amplitude, double width,
                                                   double box_halfwidth) {
  return {Kind::PeriodicizedGaussian, amplitude, 1.0, width, box_halfwidth};
}

double eval_derivative(const PotentialSpec& spec, double x, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("derivative order must be 0..3");
  switch (spec.kind) {
    case PotentialSpec::Kind::Zero:
      return 0.0;
    case PotentialSpec::Kind::Cosine: {
      double k = spec.wavenumber;
      double a = spec.amplitude * std::pow(k, order);
      switch (order) {
        case 0: return a * std::cos(k * x);
        case 1: return -a * std::sin(k * x);
        case 2: return -a * std::cos(k * x);
        default: return a * std::sin(k * x);
      }
    }
    case PotentialSpec::Kind::PeriodicizedGaussian: {
      double xw = wrap_position(x, spec.box_halfwidth);
      double period = 2.0 * spec.box_halfwidth;
      double total = spec.amplitude * gaussian_term(xw, spec.width, order);
      for (int m = 1;; ++m) {
        double left = spec.amplitude * gaussian_term(xw - m * period, spec.width, order);
        double right = spec.amplitude * gaussian_term(xw + m * period, spec.width, order);
        total += left + right;
        double tail = std::exp(-std::pow(m * period - std::abs(xw), 2) /
                               (2.0 * spec.width * spec.width));
        if (std::abs(spec.amplitude) * tail < kImageCutoff) break;
      }
      return total;
    }
  }
  return 0.0;
}

double potential_constant(const PotentialSpec& spec) {
  switch (spec.kind) {
    case PotentialSpec::Kind::Zero:
      return 0.0;
    case PotentialSpec::Kind::Cosine: {
      double k = std::abs(spec.wavenumber);
      double a = std::abs(spec.amplitude);
      return a * std::max({k, k * k, k * k * k});
    }
    case PotentialSpec::Kind::PeriodicizedGaussian: {
      // Dense sampling, refined until the sup stabilizes.
      double prev = 0.0;
      for (std::size_t n = 16384;; n *= 2) {
        double sup = 0.0;
        double dx = 2.0 * spec.box_halfwidth / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          double x = -spec.box_halfwidth + static_cast<double>(i) * dx;
          for (int order = 1; order <= 3; ++order)
            sup = std::max(sup, std::abs(eval_derivative(spec, x, order)));
        }
        if (n > 16384 && std::abs(sup - prev) < 1e-7) return sup;
        if (n >= (1u << 22)) return sup;
        prev = sup;
      }
    }
  }
  return 0.0;
}

std::vector<double> convolve(const PotentialSpec& spec, std::span<const double> rho,
                             int order) {
  if (order < 0 || order > 2) throw std::invalid_argument("convolution order must be 0..2");
  if (rho.empty() || (rho.size() & (rho.size() - 1)) != 0)
    throw std::invalid_argument("convolve: density grid size must be a power of two");
  std::size_t n = rho.size();
  double dx = 2.0 * spec.box_halfwidth / static_cast<double>(n);

  std::vector<std::complex<double>> kernel(n), density(n);
  for (std::size_t m = 0; m < n; ++m) {
    kernel[m] = eval_derivative(spec, static_cast<double>(m) * dx, order);
    density[m] = rho[m];
  }
  std::size_t shape[1] = {n};
  fft::forward_all(kernel.data(), shape);
  fft::forward_all(density.data(), shape);
  for (std::size_t m = 0; m < n; ++m) kernel[m] *= density[m];
  fft::backward_all(kernel.data(), shape);

  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) out[m] = kernel[m].real() * dx;
  return out;
}

}  // namespace hvlab
