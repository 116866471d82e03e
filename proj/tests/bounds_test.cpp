#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hvlab/bounds.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("interaction constants follow the potential amplitude") {
  const auto zero = BoundParams::from_potential(PotentialSpec::zero(kPi), 2.0);
  CHECK(zero.c_gamma == 0.0);
  CHECK(zero.M == 2.0);
  CHECK(zero.c1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zero.c2 == 0.0);
  CHECK(zero.c3 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  const double c = potential_constant(spec);
  const auto bp = BoundParams::from_potential(spec, 1.5);
  CHECK(bp.c_gamma == doctest::Approx(c).epsilon(1e-12));
  CHECK(bp.c1 == doctest::Approx(std::sqrt(1.0 + 4.0 * c * c)).epsilon(1e-12));
  CHECK(bp.c2 == doctest::Approx(4.0 * c).epsilon(1e-12));
  CHECK(bp.c3 ==
        doctest::Approx(std::sqrt(2.0 * (1.0 + 8.0 * c * c))).epsilon(1e-12));

  const auto d3 = BoundParams::from_potential(spec, 1.5, 3);
  CHECK(d3.c1 ==
        doctest::Approx(std::sqrt(3.0 * (1.0 + 4.0 * c * c))).epsilon(1e-12));
  CHECK(d3.c2 == doctest::Approx(12.0 * c).epsilon(1e-12));
}

TEST_CASE("envelopes match their closed forms") {
  BoundParams bp;
  bp.M = 1.2;
  bp.c_gamma = 0.7;
  bp.c1 = 1.3;
  bp.c2 = 2.8;
  bp.c3 = 2.1;
  const double t = 0.37;
  const auto v = theoretical_bounds(bp, t);

  const double c = bp.c_gamma, M = bp.M;
  const double cm2 = c * M * M;
  CHECK(v.q_m == doctest::Approx(M * (1.0 + cm2 + cm2 * std::exp((1.0 + 2.0 * cm2) * t)) /
                                 (1.0 + 2.0 * cm2))
                     .epsilon(1e-12));
  CHECK(v.b1_nbody ==
        doctest::Approx(M * std::exp((1.0 + bp.c1 * bp.c1) * t / 2.0))
            .epsilon(1e-12));
  const double a = 1.0 + bp.c1 * bp.c1;
  CHECK(v.b2_nbody ==
        doctest::Approx(M *
                        std::sqrt(1.0 + bp.c2 * bp.c2 / a *
                                            (std::exp(a * t) - 1.0)) *
                        std::exp((1.5 + bp.c3 * bp.c3) * t))
            .epsilon(1e-10));
  CHECK(v.lipschitz_factor >= std::exp(t));
}

TEST_CASE("envelopes start at the initial norm and grow") {
  BoundParams bp;
  bp.M = 2.0;
  bp.c_gamma = 0.5;
  bp.c1 = 1.0;
  bp.c2 = 2.0;
  bp.c3 = 1.5;
  const auto v0 = theoretical_bounds(bp, 0.0);
  CHECK(v0.q_m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(v0.b1_nbody == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(v0.b2_nbody == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(v0.lipschitz_factor == doctest::Approx(1.0).epsilon(1e-12));

  double prev_q = 0.0, prev_b1 = 0.0, prev_b2 = 0.0, prev_l = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const auto v = theoretical_bounds(bp, 0.1 * i);
    CHECK(v.q_m >= prev_q);
    CHECK(v.b1_nbody >= prev_b1);
    CHECK(v.b2_nbody >= prev_b2);
    CHECK(v.lipschitz_factor >= prev_l);
    prev_q = v.q_m;
    prev_b1 = v.b1_nbody;
    prev_b2 = v.b2_nbody;
    prev_l = v.lipschitz_factor;
  }

  CHECK_THROWS_AS(theoretical_bounds(bp, -0.1), std::invalid_argument);
}

TEST_CASE("flow derivative envelopes") {
  CHECK(flow_derivative_bound(0.0, 1.0, 0.5) ==
        doctest::Approx(std::exp(0.5)).epsilon(1e-12));
  CHECK(flow_derivative_bound(0.7, 1.3, 0.5) ==
        doctest::Approx(std::exp((1.0 + 0.7 * 1.69) * 0.5)).epsilon(1e-12));
  CHECK(flow_second_derivative_bound(0.7, 1.3, 0.5) ==
        doctest::Approx(0.5 * std::exp(2.0 * (1.0 + 0.7 * 1.69) * 0.5))
            .epsilon(1e-12));
  // negative spans behave like their magnitude
  CHECK(flow_derivative_bound(0.7, 1.3, -0.5) ==
        doctest::Approx(flow_derivative_bound(0.7, 1.3, 0.5)).epsilon(1e-12));
}

TEST_CASE("second derivative solution envelope dominates its leading term") {
  BoundParams bp;
  bp.M = 1.0;
  bp.c_gamma = 0.5;
  bp.c1 = std::sqrt(2.0);
  bp.c2 = 2.0;
  bp.c3 = std::sqrt(6.0);
  for (int i = 1; i <= 5; ++i) {
    const double t = 0.1 * i;
    const double dz = flow_derivative_bound(bp.c_gamma, bp.M, t);
    const double b = second_derivative_solution_bound(bp, t);
    CHECK(b >= bp.M * dz * dz);
    CHECK(std::isfinite(b));
  }
  // at t = 0: M (DZ^2 + sqrt(2) D2Z) = M (1 + sqrt(2)/2)
  CHECK(second_derivative_solution_bound(bp, 0.0) ==
        doctest::Approx(bp.M * (1.0 + std::sqrt(2.0) / 2.0)).epsilon(1e-6));
}

TEST_CASE("convergence envelope decreases in particle number") {
  const auto bp =
      BoundParams::from_potential(PotentialSpec::cosine(1.0, 1.0, kPi), 1.0);
  double prev = 1e300;
  for (const std::size_t n : {4, 8, 16, 32, 64}) {
    const double env = convergence_envelope(bp, 0.5, 0.5, n);
    CHECK(env > 0.0);
    CHECK(env < prev);
    prev = env;
  }
  // grows in time
  double prev_t = 0.0;
  for (int i = 1; i <= 5; ++i) {
    const double env = convergence_envelope(bp, 0.1 * i, 0.5, 8);
    CHECK(env >= prev_t);
    prev_t = env;
  }
  CHECK_THROWS_AS(convergence_envelope(bp, 0.5, 1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(convergence_envelope(bp, 0.5, -0.1, 8), std::invalid_argument);
}
