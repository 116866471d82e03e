#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hvlab {

// Even two-body interaction potential on the periodic box [-L, L).
// Cosine: amplitude * cos(wavenumber * x).
// PeriodicizedGaussian: amplitude * sum_m exp(-(x - 2Lm)^2 / (2 width^2)).
struct PotentialSpec {
  enum class Kind { Zero, Cosine, PeriodicizedGaussian };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double wavenumber = 1.0;  // Cosine only
  double width = 1.0;       // PeriodicizedGaussian only
  double box_halfwidth = 3.14159265358979323846;

  static PotentialSpec zero(double box_halfwidth);
  static PotentialSpec cosine(double amplitude, double wavenumber, double box_halfwidth);
  static PotentialSpec periodicized_gaussian(double amplitude, double width,
                                             double box_halfwidth);
};

// Value of the potential or one of its first three derivatives at x.
// order 0..3; throws std::invalid_argument otherwise.
double eval_derivative(const PotentialSpec& spec, double x, int order);

// max over orders 1..3 of the sup norm of the derivative over the box.
// Closed form for Zero and Cosine; dense oversampling for the Gaussian kind.
double potential_constant(const PotentialSpec& spec);

// Periodic convolution (d^order potential) * rho on the n-point position grid
// of the box, computed spectrally. order 0..2.
std::vector<double> convolve(const PotentialSpec& spec, std::span<const double> rho,
                             int order);

}  // namespace hvlab
