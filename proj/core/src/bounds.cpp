#include "hvlab/bounds.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace hvlab {

namespace {

double q_m_value(double M, double c, double t) {
  const double cm2 = c * M * M;
  return M * (1.0 + cm2 + cm2 * std::exp((1.0 + 2.0 * cm2) * t)) /
         (1.0 + 2.0 * cm2);
}

// Simpson quadrature on [0, t] with a fixed even panel count.
double integrate(const std::function<double(double)>& f, double t,
                 std::size_t panels = 512) {
  if (t <= 0.0) return 0.0;
  const double h = t / static_cast<double>(panels);
  double sum = f(0.0) + f(t);
  for (std::size_t i = 1; i < panels; ++i)
    sum += f(static_cast<double>(i) * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

BoundParams BoundParams::from_potential(const PotentialSpec& spec, double M,
                                        std::size_t dim) {
  const double c = potential_constant(spec);
  const double d = static_cast<double>(dim);
  BoundParams bp;
  bp.M = M;
  bp.c_gamma = c;
  bp.c1 = std::sqrt(d * (1.0 + 4.0 * c * c));
  bp.c2 = 4.0 * d * c;
  bp.c3 = std::sqrt(2.0 * d * (1.0 + 8.0 * c * c));
  return bp;
}

BoundValues theoretical_bounds(const BoundParams& bp, double t) {
  if (t < 0.0) throw std::invalid_argument("theoretical_bounds: t must be >= 0");
  const double M = bp.M;
  const double c = bp.c_gamma;
  BoundValues out;
  out.q_m = q_m_value(M, c, t);

  const double e1 = 1.0 + bp.c1 * bp.c1;
  out.b1_nbody = M * std::exp(0.5 * e1 * t);
  out.b2_nbody =
      M *
      std::sqrt(1.0 + bp.c2 * bp.c2 / e1 * (std::exp(e1 * t) - 1.0)) *
      std::exp((1.5 + bp.c3 * bp.c3) * t);

  // q_m(tau) = a + b e^{g tau}; int_0^t q_m^2 has the closed form below.
  const double cm2 = c * M * M;
  const double g = 1.0 + 2.0 * cm2;
  const double a = M * (1.0 + cm2) / g;
  const double b = M * cm2 / g;
  const double int_q2 = a * a * t + 2.0 * a * b * (std::exp(g * t) - 1.0) / g +
                        b * b * (std::exp(2.0 * g * t) - 1.0) / (2.0 * g);
  out.lipschitz_factor = std::exp(t + 4.0 * c * c * M * M * int_q2);
  return out;
}

double flow_derivative_bound(double c_gamma, double l2_norm, double span) {
  return std::exp((1.0 + c_gamma * l2_norm * l2_norm) * std::abs(span));
}

double flow_second_derivative_bound(double c_gamma, double l2_norm,
                                    double span) {
  return 0.5 *
         std::exp(2.0 * (1.0 + c_gamma * l2_norm * l2_norm) * std::abs(span));
}

double second_derivative_solution_bound(const BoundParams& bp, double t,
                                        std::size_t dim) {
  if (t < 0.0)
    throw std::invalid_argument("second_derivative_solution_bound: t >= 0");
  const double M = bp.M;
  const double c = bp.c_gamma;
  const double root2d = std::sqrt(2.0 * static_cast<double>(dim));
  const auto dz = [&](double span) { return flow_derivative_bound(c, M, span); };
  const auto d2z = [&](double span) {
    return flow_second_derivative_bound(c, M, span);
  };
  const auto k = [&](double tau) { return 2.0 * c * M * q_m_value(M, c, tau); };

  double bound = M * dz(t) * dz(t) + root2d * M * d2z(t);
  bound += 2.0 * root2d * M * dz(t) *
           integrate([&](double tau) { return k(tau) * dz(t - tau); }, t);
  bound += M * integrate(
                   [&](double tau) {
                     const double f = dz(t - tau);
                     return k(tau) * f * f;
                   },
                   t);
  bound += M * integrate([&](double tau) { return k(tau) * d2z(t - tau); }, t);
  return bound;
}

double convergence_envelope(const BoundParams& bp, double t, double lambda,
                            std::size_t n_particles, std::size_t dim) {
  if (t < 0.0) throw std::invalid_argument("convergence_envelope: t >= 0");
  if (lambda < 0.0 || lambda >= 1.0)
    throw std::invalid_argument("convergence_envelope: lambda in [0,1)");
  if (n_particles < 2)
    throw std::invalid_argument("convergence_envelope: need N >= 2");

  const double c = bp.c_gamma;
  const double coeff1 = 2.0 * c * std::sqrt(2.0 * (1.0 + std::pow(2.0, -lambda)));
  const auto b1 = [&](double tau) {
    const double q = q_m_value(bp.M, c, tau);
    return coeff1 * (2.0 * q * q + 2.0 * (1.0 + q * q));
  };
  const auto b2 = [&](double tau) {
    const double q = q_m_value(bp.M, c, tau);
    return 2.0 * std::sqrt(2.0) * c *
           (q * q + theoretical_bounds(bp, tau).b2_nbody +
            second_derivative_solution_bound(bp, tau, dim));
  };

  const double n = static_cast<double>(n_particles);
  const double rate = std::pow(n, -lambda) + std::pow(n, -0.25 * (1.0 - lambda));
  return rate * integrate(b2, t, 128) * std::exp(integrate(b1, t, 128));
}

}  // namespace hvlab
