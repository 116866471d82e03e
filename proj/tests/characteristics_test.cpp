#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hvlab/characteristics.hpp"
#include "hvlab/potential.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;

// Classical RK4 reference integrator for the N-body system.
NBodyState rk4_nbody(const PotentialSpec& spec, NBodyState state, double t1,
                     double dt) {
  const std::size_t n = state.count();
  const double coupling = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
  auto accel = [&](const std::vector<double>& x, std::vector<double>& a) {
    for (std::size_t m = 0; m < n; ++m) {
      double f = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (k != m) f += eval_derivative(spec, x[k] - x[m], 1);
      a[m] = coupling * f;
    }
  };
  const double span = t1 - state.time;
  const auto steps =
      static_cast<std::size_t>(std::ceil(std::abs(span) / dt - 1e-12));
  const double h = span / static_cast<double>(steps);
  std::vector<double> a1(n), a2(n), a3(n), a4(n), xs(n), v2(n), v3(n), v4(n);
  for (std::size_t s = 0; s < steps; ++s) {
    auto& x = state.positions;
    auto& v = state.velocities;
    accel(x, a1);
    for (std::size_t m = 0; m < n; ++m) {
      xs[m] = x[m] + 0.5 * h * v[m];
      v2[m] = v[m] + 0.5 * h * a1[m];
    }
    accel(xs, a2);
    for (std::size_t m = 0; m < n; ++m) {
      xs[m] = x[m] + 0.5 * h * v2[m];
      v3[m] = v[m] + 0.5 * h * a2[m];
    }
    accel(xs, a3);
    for (std::size_t m = 0; m < n; ++m) {
      xs[m] = x[m] + h * v3[m];
      v4[m] = v[m] + h * a3[m];
    }
    accel(xs, a4);
    for (std::size_t m = 0; m < n; ++m) {
      x[m] += h / 6.0 * (v[m] + 2.0 * v2[m] + 2.0 * v3[m] + v4[m]);
      v[m] += h / 6.0 * (a1[m] + 2.0 * a2[m] + 2.0 * a3[m] + a4[m]);
    }
  }
  for (auto& x : state.positions)
    x = wrap_position(x, spec.box_halfwidth);
  state.time = t1;
  return state;
}

double circle_distance(double a, double b, double halfwidth) {
  return std::abs(wrap_position(a - b, halfwidth));
}
}  // namespace

TEST_CASE("position wrapping lands in the half-open box") {
  CHECK(wrap_position(kPi, kPi) == doctest::Approx(-kPi));
  CHECK(wrap_position(3.0 * kPi + 0.1, kPi) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_position(-kPi, kPi) == doctest::Approx(-kPi));
  CHECK(wrap_position(0.5, kPi) == doctest::Approx(0.5));
}

TEST_CASE("free flight is exact") {
  const auto spec = PotentialSpec::zero(kPi);
  NBodyState state{{0.1, -1.0, 2.0}, {0.5, -0.25, 1.5}, 0.0};
  const auto out = flow_nbody(spec, state, 0.7, 1e-3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(circle_distance(out.positions[m],
                          state.positions[m] + 0.7 * state.velocities[m],
                          kPi) <= 1e-12);
    CHECK(out.velocities[m] == doctest::Approx(state.velocities[m]));
  }
}

TEST_CASE("forward then backward returns the initial state") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  NBodyState state{{0.3, -0.8, 1.2, 2.5}, {0.4, 0.0, -0.6, 0.2}, 0.0};
  const auto fwd = flow_nbody(spec, state, 1.0, 1e-3);
  const auto back = flow_nbody(spec, fwd, 0.0, 1e-3);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(circle_distance(back.positions[m], state.positions[m], kPi) <=
          1e-10);
    CHECK(std::abs(back.velocities[m] - state.velocities[m]) <= 1e-10);
  }
}

TEST_CASE("two-body trajectory matches a fine RK4 reference") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  NBodyState state{{-0.5, 0.9}, {0.3, -0.1}, 0.0};
  const auto verlet = flow_nbody(spec, state, 1.0, 1e-3);
  const auto reference = rk4_nbody(spec, state, 1.0, 1e-6);
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(circle_distance(verlet.positions[m], reference.positions[m], kPi) <=
          1e-5);
    CHECK(std::abs(verlet.velocities[m] - reference.velocities[m]) <= 1e-5);
  }
}

TEST_CASE("nonpositive step rejected") {
  const auto spec = PotentialSpec::zero(kPi);
  NBodyState state{{0.0}, {1.0}, 0.0};
  CHECK_THROWS_AS(flow_nbody(spec, state, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(flow_nbody(spec, state, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("energy drift stays small over unit time") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  NBodyState state;
  for (int m = 0; m < 16; ++m) {
    state.positions.push_back(wrap_position(0.37 * m, kPi));
    state.velocities.push_back(0.2 * std::sin(1.7 * m));
  }
  const double e0 = nbody_energy(spec, state);
  const auto out = flow_nbody(spec, state, 1.0, 1e-3);
  const double e1 = nbody_energy(spec, out);
  CHECK(std::abs(e1 - e0) / std::max(1.0, std::abs(e0)) <= 1e-8);
}

TEST_CASE("flow composition and permutation equivariance") {
  const auto spec = PotentialSpec::cosine(0.8, 1.0, kPi);
  NBodyState state{{0.1, -1.3, 0.7}, {0.2, 0.5, -0.4}, 0.0};

  const auto direct = flow_nbody(spec, state, 0.8, 1e-3);
  const auto mid = flow_nbody(spec, state, 0.5, 1e-3);
  const auto chained = flow_nbody(spec, mid, 0.8, 1e-3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(circle_distance(direct.positions[m], chained.positions[m], kPi) <=
          1e-8);
    CHECK(std::abs(direct.velocities[m] - chained.velocities[m]) <= 1e-8);
  }

  NBodyState permuted{{state.positions[2], state.positions[0],
                       state.positions[1]},
                      {state.velocities[2], state.velocities[0],
                       state.velocities[1]},
                      0.0};
  const auto out_permuted = flow_nbody(spec, permuted, 0.8, 1e-3);
  CHECK(out_permuted.positions[0] == direct.positions[2]);
  CHECK(out_permuted.positions[1] == direct.positions[0]);
  CHECK(out_permuted.velocities[2] == direct.velocities[1]);
}

TEST_CASE("mean-field flow with zero force is free flight") {
  const Axis axis{32, kPi};
  FieldHistory history(axis, {0.0, 1.0},
                       {std::vector<double>(32, 0.0),
                        std::vector<double>(32, 0.0)});
  const auto out = flow_meanfield(history, {0.2, 0.7}, 0.0, 1.0, 1e-3);
  CHECK(out.x == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(out.v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("constant force gives uniform acceleration") {
  const Axis axis{32, kPi};
  const double c = 0.35;
  FieldHistory history(axis, {0.0, 1.0},
                       {std::vector<double>(32, c),
                        std::vector<double>(32, c)});
  const auto out = flow_meanfield(history, {-0.4, 0.25}, 0.0, 1.0, 1e-3);
  CHECK(std::abs(out.v - (0.25 + c)) <= 1e-10);
  CHECK(std::abs(out.x - (-0.4 + 0.25 + 0.5 * c)) <= 1e-10);
}

TEST_CASE("time-ramped cosine force matches an RK4 reference") {
  const Axis axis{64, kPi};
  // F(t, x) = cos(x) (1 + t), sliced densely in t
  std::vector<double> times;
  std::vector<std::vector<double>> slices;
  for (int s = 0; s <= 1000; ++s) {
    const double t = static_cast<double>(s) * 1e-3;
    times.push_back(t);
    std::vector<double> slice(64);
    for (std::size_t i = 0; i < 64; ++i)
      slice[i] = std::cos(axis.coordinate(i)) * (1.0 + t);
    slices.push_back(std::move(slice));
  }
  FieldHistory history(axis, std::move(times), std::move(slices));

  const auto out = flow_meanfield(history, {0.15, -0.3}, 0.0, 1.0, 1e-4);

  double x = 0.15, v = -0.3, t = 0.0;
  const double h = 1e-6;
  auto f = [](double tt, double xx) { return std::cos(xx) * (1.0 + tt); };
  for (int s = 0; s < 1000000; ++s) {
    const double k1x = v, k1v = f(t, x);
    const double k2x = v + 0.5 * h * k1v, k2v = f(t + 0.5 * h, x + 0.5 * h * k1x);
    const double k3x = v + 0.5 * h * k2v, k3v = f(t + 0.5 * h, x + 0.5 * h * k2x);
    const double k4x = v + h * k3v, k4v = f(t + h, x + h * k3x);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t += h;
  }
  CHECK(std::abs(out.x - x) <= 1e-6);
  CHECK(std::abs(out.v - v) <= 1e-6);
}

TEST_CASE("leaving the history range is an error") {
  const Axis axis{16, kPi};
  FieldHistory history(axis, {0.0, 0.5},
                       {std::vector<double>(16, 0.0),
                        std::vector<double>(16, 0.0)});
  CHECK_THROWS_AS(flow_meanfield(history, {0.0, 0.0}, 0.0, 1.0, 1e-2),
                  std::out_of_range);
}

TEST_CASE("finite-difference jacobian of the free flow") {
  const Axis axis{16, kPi};
  FieldHistory history(axis, {0.0, 1.0},
                       {std::vector<double>(16, 0.0),
                        std::vector<double>(16, 0.0)});
  const double t = 0.8;
  const auto jac = flow_jacobian_fd(
      [&](PhasePoint z) { return flow_meanfield(history, z, 0.0, t, 1e-3); },
      {0.1, 0.2}, 1e-5);
  CHECK(jac[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(jac[1] == doctest::Approx(t).epsilon(1e-6));
  CHECK(std::abs(jac[2]) <= 1e-6);
  CHECK(jac[3] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("hamiltonian flow jacobian has unit determinant") {
  const Axis axis{64, kPi};
  std::vector<double> slice(64);
  for (std::size_t i = 0; i < 64; ++i)
    slice[i] = std::sin(axis.coordinate(i));
  FieldHistory history(axis, {0.0, 1.0}, {slice, slice});
  const auto jac = flow_jacobian_fd(
      [&](PhasePoint z) { return flow_meanfield(history, z, 0.0, 1.0, 1e-3); },
      {0.3, -0.2}, 1e-5);
  const double det = jac[0] * jac[3] - jac[1] * jac[2];
  CHECK(det == doctest::Approx(1.0).epsilon(1e-6));
}
