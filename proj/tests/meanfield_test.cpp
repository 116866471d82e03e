#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hvlab/experiment.hpp"
#include "hvlab/meanfield.hpp"
#include "hvlab/phasefield.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;

PhaseGrid pv_grid(std::size_t n = 64) {
  return PhaseGrid::make1d(CoordinateKind::PositionVelocity, n, kPi, n, kPi);
}

ComplexField packet(const PhaseGrid& grid) {
  return gaussian_packet(grid, 0.6, 0.5, 0.4, 1);
}

double field_distance(const ComplexField& a, const ComplexField& b) {
  std::vector<Complex> diff(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= b[i];
  return ComplexField(a.grid(), std::move(diff)).l2_norm();
}

// Free-streamed field f0(x - vt, v) via spectral interpolation of the
// initial datum.
ComplexField free_transport(const ComplexField& f0, double t) {
  const SpectralInterpolant interp(f0);
  const PhaseGrid& grid = f0.grid();
  std::vector<Complex> values(grid.point_count());
  for (std::size_t i = 0; i < grid.axis(0).n; ++i)
    for (std::size_t j = 0; j < grid.axis(1).n; ++j) {
      const double v = grid.axis(1).coordinate(j);
      const std::array<double, 2> z{grid.axis(0).coordinate(i) - v * t, v};
      values[i * grid.axis(1).n + j] = interp(z);
    }
  return ComplexField(grid, std::move(values));
}
}  // namespace

TEST_CASE("vlasov solver reproduces free streaming") {
  const auto grid = pv_grid();
  const auto alpha = packet(grid);
  std::vector<Complex> dens(grid.point_count());
  for (std::size_t i = 0; i < dens.size(); ++i)
    dens[i] = std::norm(alpha[i]);
  ComplexField f0(grid, std::move(dens));
  // normalize to unit mass
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.point_count(); ++i)
    mass += f0[i].real() * grid.cell_volume();
  std::vector<Complex> scaled(f0.values().begin(), f0.values().end());
  for (auto& v : scaled) v /= mass;
  f0 = ComplexField(grid, std::move(scaled));

  SolverParams params;
  params.dt = 5e-3;
  const auto spec = PotentialSpec::zero(kPi);
  const auto traj = solve_vlasov(f0, spec, 0.5, params);

  const auto expected = free_transport(f0, traj.times.back());
  CHECK(field_distance(traj.fields.back(), expected) <= 1e-8);
}

TEST_CASE("vlasov solver conserves mass") {
  const auto grid = pv_grid();
  const auto alpha = packet(grid);
  std::vector<Complex> dens(grid.point_count());
  double mass = 0.0;
  for (std::size_t i = 0; i < dens.size(); ++i) {
    dens[i] = std::norm(alpha[i]);
    mass += dens[i].real() * grid.cell_volume();
  }
  for (auto& v : dens) v /= mass;
  SolverParams params;
  params.dt = 5e-3;
  const auto traj = solve_vlasov(ComplexField(grid, std::move(dens)),
                                 PotentialSpec::cosine(1.0, 1.0, kPi), 0.5,
                                 params);
  for (const auto& f : traj.fields) {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.point_count(); ++i)
      m += f[i].real() * grid.cell_volume();
    CHECK(std::abs(m - 1.0) <= 1e-8);
  }
}

TEST_CASE("vlasov solver rejects signed densities") {
  const auto grid = pv_grid(32);
  std::vector<Complex> values(grid.point_count(), Complex{-1.0, 0.0});
  SolverParams params;
  CHECK_THROWS_AS(solve_vlasov(ComplexField(grid, std::move(values)),
                               PotentialSpec::zero(kPi), 0.1, params),
                  std::invalid_argument);
}

TEST_CASE("transport solver reproduces free streaming of the half-density") {
  const auto grid = pv_grid();
  const auto alpha0 = packet(grid);
  SolverParams params;
  params.dt = 5e-3;
  const auto traj =
      solve_hamilton_vlasov(alpha0, PotentialSpec::zero(kPi), 0.5, params);
  const auto expected = free_transport(alpha0, traj.times.back());
  CHECK(field_distance(traj.fields.back(), expected) <= 1e-8);
}

TEST_CASE("transport solver conserves the L2 norm") {
  const auto grid = pv_grid();
  SolverParams params;
  params.dt = 5e-3;
  const auto traj = solve_hamilton_vlasov(
      packet(grid), PotentialSpec::cosine(1.0, 1.0, kPi), 0.5, params);
  for (const auto& f : traj.fields)
    CHECK(std::abs(f.l2_norm() - 1.0) <= 1e-8);
}

TEST_CASE("iteration failure carries the residual history") {
  const auto grid = pv_grid(32);
  SolverParams params;
  params.dt = 1e-2;
  params.picard_tol = 1e-16;
  params.picard_max_iter = 1;
  try {
    solve_hamilton_vlasov(packet(grid), PotentialSpec::cosine(1.0, 1.0, kPi),
                          0.5, params);
    FAIL("expected IterationFailure");
  } catch (const IterationFailure& e) {
    CHECK_FALSE(e.residuals().empty());
  }
}

TEST_CASE("hartree solver round trips under zero potential") {
  // The zero-potential generator is real in the doubly-transformed frame, so
  // conjugation reverses time: conj(U_T conj(U_T a)) = a. This is exact only
  // up to the state's content at the Nyquist bins, so use a packet whose
  // velocity profile decays below 1e-15 at the box edge.
  const auto grid = pv_grid();
  const auto hat0 = velocity_fourier(gaussian_packet(grid, 0.35, 0.2, 0.0, 1));
  SolverParams params;
  params.dt = 5e-3;
  const auto spec = PotentialSpec::zero(kPi);
  const auto fwd = solve_hamilton_hartree(hat0, spec, 0.5, params);
  const PhaseGrid& xi_grid = hat0.grid();
  std::vector<Complex> conj_values(fwd.fields.back().values().begin(),
                                   fwd.fields.back().values().end());
  for (auto& v : conj_values) v = std::conj(v);
  const auto back = solve_hamilton_hartree(
      ComplexField(xi_grid, std::move(conj_values)), spec, 0.5, params);
  std::vector<Complex> result(back.fields.back().values().begin(),
                              back.fields.back().values().end());
  for (auto& v : result) v = std::conj(v);
  CHECK(field_distance(ComplexField(xi_grid, std::move(result)), hat0) <=
        1e-12);
}

TEST_CASE("hartree solver conserves norm and energy") {
  const auto grid = pv_grid();
  const auto hat0 = velocity_fourier(packet(grid));
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  SolverParams params;
  params.dt = 1e-3;
  params.snapshot_stride = 50;
  const auto traj = solve_hamilton_hartree(hat0, spec, 0.5, params);
  const double e0 = energy_hartree(hat0, spec);
  REQUIRE(std::abs(e0) > 1e-3);  // modulated packet has nonzero energy
  for (const auto& f : traj.fields) {
    CHECK(std::abs(f.l2_norm() - 1.0) <= 1e-10);
    CHECK(std::abs(energy_hartree(f, spec) - e0) / std::abs(e0) <= 1e-6);
  }
}

TEST_CASE("hartree energy basics") {
  const auto grid = pv_grid(32);
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  const PhaseGrid xi_grid =
      PhaseGrid::make1d(CoordinateKind::PositionXi, 32, kPi, 32, kPi);
  CHECK(energy_hartree(ComplexField(xi_grid), spec) == 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    // value must be real: exercised through the imaginary part of the
    // quadratic form, which the implementation discards; instead check
    // the value is insensitive to a global phase.
    const auto state = random_state(seed, xi_grid, 2);
    std::vector<Complex> rotated(state.values().begin(), state.values().end());
    const Complex phase = std::exp(Complex{0.0, 0.7});
    for (auto& v : rotated) v *= phase;
    const double a = energy_hartree(state, spec);
    const double b = energy_hartree(ComplexField(xi_grid, std::move(rotated)),
                                    spec);
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("hartree kinetic energy matches a quadrature oracle") {
  // alpha_hat = normalized product gaussian: the kinetic part
  // (1/2) Re <a, dx dxi a> integrates analytically to
  // (1/2) int x xi a(x,xi)^2 dx dxi = 0 for the even packet, so use a shifted
  // packet and a direct quadrature of the spectral derivative instead.
  const PhaseGrid grid =
      PhaseGrid::make1d(CoordinateKind::PositionXi, 64, 8.0, 64, 8.0);
  std::vector<Complex> values(grid.point_count());
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) {
      const double x = grid.axis(0).coordinate(i) - 0.5;
      const double xi = grid.axis(1).coordinate(j) - 0.3;
      values[i * 64 + j] = std::exp(-0.5 * (x * x + xi * xi));
    }
  const auto state = ComplexField(grid, std::move(values)).normalized();
  const auto dx = spectral_derivative(state, 0);
  const auto dxdxi = spectral_derivative(dx, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.point_count(); ++i)
    acc += (std::conj(state[i]) * dxdxi[i]).real();
  const double oracle = 0.5 * acc * grid.cell_volume();
  CHECK(energy_hartree(state, PotentialSpec::zero(8.0)) ==
        doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("closed-form envelope values") {
  BoundParams bp;
  bp.M = 2.5;
  bp.c_gamma = 0.8;
  CHECK(theoretical_bounds(bp, 0.0).q_m == doctest::Approx(2.5).epsilon(1e-12));

  BoundParams simple;
  simple.M = 1.0;
  simple.c1 = 0.0;
  CHECK(theoretical_bounds(simple, std::log(4.0)).b1_nbody ==
        doctest::Approx(2.0).epsilon(1e-12));

  BoundParams unit;
  unit.M = 1.0;
  unit.c_gamma = 1.0;
  double prev = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double q = theoretical_bounds(unit, 0.1 * i).q_m;
    CHECK(q >= prev);
    prev = q;
  }

  CHECK_THROWS_AS(theoretical_bounds(bp, -1.0), std::invalid_argument);
}

TEST_CASE("snapshot stride keeps endpoints") {
  const auto grid = pv_grid(32);
  SolverParams params;
  params.dt = 1e-2;
  params.snapshot_stride = 7;
  const auto traj = solve_hamilton_hartree(velocity_fourier(packet(grid)),
                                           PotentialSpec::cosine(1.0, 1.0, kPi),
                                           0.25, params);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(field_distance(traj.fields.front(),
                       velocity_fourier(packet(grid))) <= 1e-14);
}
