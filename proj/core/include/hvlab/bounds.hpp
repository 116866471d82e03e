#pragma once

#include <cstddef>

#include "hvlab/potential.hpp"

namespace hvlab {

// Constants entering the Gronwall-type norm bounds: M bounds the relevant
// initial norms, c_gamma is potential_constant(spec), and c1..c3 are the
// mean-field-consistency constants of the interaction.
struct BoundParams {
  double M = 1.0;
  double c_gamma = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  // c1 = sqrt(d (1 + 4 c_gamma^2)), c2 = 4 d c_gamma,
  // c3 = sqrt(2 d (1 + 8 c_gamma^2)).
  static BoundParams from_potential(const PotentialSpec& spec, double M,
                                    std::size_t dim = 1);
};

struct BoundValues {
  double q_m = 0.0;              // W^{1,2} envelope of the mean-field solution
  double b1_nbody = 0.0;         // N-body first-derivative envelope
  double b2_nbody = 0.0;         // N-body second-derivative envelope
  double lipschitz_factor = 0.0; // solution-map Lipschitz constant
};

// Evaluates the four closed-form envelopes at time t >= 0:
//   q_m(t)     = M (1 + cM^2 + cM^2 e^{(1+2cM^2)t}) / (1 + 2cM^2),  c = c_gamma
//   b1(t)      = M e^{(1+c1^2)t/2}
//   b2(t)      = M (1 + c2^2/(1+c1^2)(e^{(1+c1^2)t}-1))^{1/2} e^{(3/2+c3^2)t}
//   lipschitz  = exp(int_0^t (1 + 4 c^2 M^2 q_m(tau)^2) dtau)   (closed form)
BoundValues theoretical_bounds(const BoundParams& bp, double t);

// Sup-norm envelopes of the mean-field characteristic flow derivatives over a
// time span; l2_norm is the L2 norm of the initial state.
//   first:  exp((1 + c_gamma l2^2) |span|)
//   second: (1/2) exp(2 (1 + c_gamma l2^2) |span|)
double flow_derivative_bound(double c_gamma, double l2_norm, double span);
double flow_second_derivative_bound(double c_gamma, double l2_norm, double span);

// Envelope of the L2 norm of the second phase-space derivative of the
// mean-field solution, composed from the flow-derivative envelopes, q_m, and
// the transport representation of the second derivative (five-term estimate):
//   B(t) = M DZ(t)^2 + sqrt(2d) M D2Z(t)
//        + 2 sqrt(2d) M DZ(t) int_0^t k(tau) DZ(t - tau) dtau
//        + M int_0^t k(tau) DZ(t - tau)^2 dtau
//        + M int_0^t k(tau) D2Z(t - tau) dtau
// with k(tau) = 2 c_gamma M q_m(tau) dominating every sup norm of a potential
// derivative convolved against the bracket density.
double second_derivative_solution_bound(const BoundParams& bp, double t,
                                        std::size_t dim = 1);

// Mean-field convergence envelope at time t for N particles and exponent
// lambda in [0,1): (N^-lambda + N^-(1-lambda)/4) (int_0^t B2) exp(int_0^t B1)
// with N-uniform coefficient functions (suprema taken over N >= 2 and the
// cutoff radius pinned to R(N) = N^{(1-lambda)/4}):
//   B1(t) = 2 c_gamma sqrt(2 (1 + 2^-lambda)) (2 q_m(t)^2 + 2 (1 + q_m(t)^2))
//   B2(t) = 2 sqrt(2) c_gamma (q_m(t)^2 + b2_nbody(t) + B_{second-deriv}(t))
double convergence_envelope(const BoundParams& bp, double t, double lambda,
                            std::size_t n_particles, std::size_t dim = 1);

}  // namespace hvlab
