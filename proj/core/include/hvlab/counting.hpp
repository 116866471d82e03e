#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hvlab/grid.hpp"
#include "hvlab/manybody.hpp"
#include "hvlab/meanfield.hpp"
#include "hvlab/potential.hpp"

namespace hvlab {

// Finite tensor-product N-particle state over a D-dimensional one-particle
// space; amplitudes indexed base-D with particle 1 most significant.
struct DiscreteState {
  std::size_t dim = 0;
  std::size_t particles = 0;
  std::vector<Complex> amplitudes;

  double norm() const;
  DiscreteState& operator+=(const DiscreteState& other);
  DiscreteState& operator*=(double factor);
};

DiscreteState product_state(std::span<const Complex> alpha,
                            std::size_t particles);
Complex inner(const DiscreteState& a, const DiscreteState& b);
DiscreteState symmetrized(const DiscreteState& state);

// Projection of particle j (1-based) onto alpha / its complement.
DiscreteState apply_p(std::span<const Complex> alpha, std::size_t j,
                      const DiscreteState& state);
DiscreteState apply_q(std::span<const Complex> alpha, std::size_t j,
                      const DiscreteState& state);

// P_k^j: exactly k of the last j particles orthogonal to alpha. Zero for
// k > j; j defaults to all particles via apply_pk(alpha, k, state).
DiscreteState apply_pk(std::span<const Complex> alpha, std::size_t k,
                       std::size_t j, const DiscreteState& state);
DiscreteState apply_pk(std::span<const Complex> alpha, std::size_t k,
                       const DiscreteState& state);

// Spectral weight f^alpha = sum_k f(k) P_k^N with the shift convention
// (f^alpha)_l = sum_k f(k) P_{k+l}^N.
struct CountingWeight {
  std::vector<double> values;  // f(0..N)
  std::ptrdiff_t shift = 0;

  static CountingWeight ones(std::size_t n_particles);
  // n(k) = sqrt(k/N)
  static CountingWeight n_counting(std::size_t n_particles);
  // m_lambda(k) = min(k / N^lambda, 1)
  static CountingWeight m_lambda(std::size_t n_particles, double lambda);
  // Delta_l m_lambda: m(k) - m(k-l) on -|l| <= k <= N^lambda + |l|, else 0.
  static CountingWeight m_lambda_difference(std::size_t n_particles,
                                            double lambda, std::ptrdiff_t l);

  CountingWeight shifted(std::ptrdiff_t l) const;
};

DiscreteState apply_weight(const CountingWeight& weight,
                           std::span<const Complex> alpha,
                           const DiscreteState& state);

// beta_N = <state, m_lambda^alpha state> in [0, 1] for normalized states.
double beta_exact(std::span<const Complex> alpha, const DiscreteState& state,
                  double lambda);

// ---- Exact N=2 grid-state path --------------------------------------------

// Projection of one particle (1 or 2) of an interleaved pair field onto the
// one-particle field alpha_hat, with grid quadrature weights.
ComplexField pair_apply_p(const ComplexField& alpha_hat,
                          const ComplexField& pair, std::size_t particle);

// m_lambda^alpha at N=2 via the rank decomposition over p/q products.
ComplexField pair_apply_m_lambda(const ComplexField& alpha_hat,
                                 const ComplexField& pair, double lambda);

double beta_pair(const ComplexField& alpha_hat, const ComplexField& pair,
                 double lambda);

// <q_1> = 1 - <pair, p_1 pair> for a normalized pair state.
double pair_q1_expectation(const ComplexField& alpha_hat,
                           const ComplexField& pair);

// Integrand of the beta_N derivative identity at N=2:
// N Im <a_N, m_lambda (V(z1-z2) - (V*|a|^2)(z1) - (V*|a|^2)(z2)) a_N>.
double beta_rhs(const ComplexField& alpha_hat, const ComplexField& pair,
                const PotentialSpec& spec, double lambda);

// ---- Cutoff and operator-norm audits ---------------------------------------

// chi_R(xi) = chi(xi/R): radial profile equal to 1 on |u| <= 1, 0 on
// |u| >= 2, 7th-order smoothstep between.
struct CutoffSpec {
  double radius = 1.0;
  double profile(double u) const;   // chi(u)
  double value(double xi) const;    // chi(xi / radius)
};

struct CutoffResidual {
  double lhs = 0.0;
  double rhs = 0.0;
};

// lhs = ||(1 - chi_R(xi)) xi field||_2, rhs = second_deriv_norm / R; when
// second_deriv_norm < 0 it is computed from the field.
CutoffResidual cutoff_residual(const ComplexField& field,
                               const CutoffSpec& cutoff,
                               double second_deriv_norm = -1.0);

// RHS - LHS per trial for the three multiplication-operator norm bounds:
// ||V(z1-z2) p1 p2|| <= C_G M1^2, ||(V*|a|^2)(z1) p1|| <= C_G M1^2,
// ||xi_1 p1|| = |||xi| a||.
struct OpNormResiduals {
  double pair_potential = 0.0;
  double mean_field_potential = 0.0;
  double xi_projection = 0.0;
};

std::vector<OpNormResiduals> opnorm_residuals(const ComplexField& alpha_hat,
                                              const PotentialSpec& spec,
                                              std::size_t trials,
                                              std::uint64_t seed);

// ---- Monte Carlo <q_1> estimator -------------------------------------------

struct McParams {
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  std::size_t z1_nx = 24;  // quadrature nodes per axis for the z1 integrals
  std::size_t z1_nv = 24;
  double dt = 1e-2;
  std::size_t threads = 1;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t rejected = 0;
};

// Estimates <q_1>(t) = 1 - ||p_1 alpha_N(t)||^2 for product initial data:
// initial points sampled from the product density, pushed forward by the
// N-body flow; per sampled tail the projection integrals over z1 use
// quadrature nodes with per-node backward flows. Deterministic in seed
// independent of threading (per-sample generators seeded seed + index).
McEstimate estimate_q1(const Trajectory& alpha_traj,
                       const ProductInitialData& data,
                       const PotentialSpec& spec, double t,
                       const McParams& mc);

}  // namespace hvlab
