#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hvlab/potential.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;

// O(n^2) periodic quadrature of (d^order Gamma) * rho on the box grid.
std::vector<double> convolve_oracle(const PotentialSpec& spec,
                                    const std::vector<double>& rho,
                                    int order) {
  const std::size_t n = rho.size();
  const double dx = 2.0 * spec.box_halfwidth / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = -spec.box_halfwidth + static_cast<double>(i) * dx;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double xj = -spec.box_halfwidth + static_cast<double>(j) * dx;
      acc += eval_derivative(spec, xi - xj, order) * rho[j];
    }
    out[i] = acc * dx;
  }
  return out;
}
}  // namespace

TEST_CASE("cosine derivatives match closed forms") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  CHECK(eval_derivative(spec, 0.0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eval_derivative(spec, kPi / 2.0, 1) ==
        doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(eval_derivative(spec, 0.7, 0) == doctest::Approx(std::cos(0.7)));
  CHECK(eval_derivative(spec, 0.7, 2) == doctest::Approx(-std::cos(0.7)));
  CHECK(eval_derivative(spec, 0.7, 3) == doctest::Approx(std::sin(0.7)));
}

TEST_CASE("zero potential vanishes at every order") {
  const auto spec = PotentialSpec::zero(kPi);
  for (int order = 0; order <= 3; ++order)
    CHECK(eval_derivative(spec, 1.234, order) == 0.0);
  CHECK(potential_constant(spec) == 0.0);
}

TEST_CASE("order outside 0..3 rejected") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  CHECK_THROWS_AS(eval_derivative(spec, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(eval_derivative(spec, 0.0, -1), std::invalid_argument);
}

TEST_CASE("first derivative is odd on the grid") {
  for (const auto& spec :
       {PotentialSpec::cosine(0.7, 2.0, kPi),
        PotentialSpec::periodicized_gaussian(1.0, 0.8, kPi)}) {
    for (int i = -32; i <= 32; ++i) {
      const double x = kPi * static_cast<double>(i) / 32.0;
      CHECK(eval_derivative(spec, x, 1) ==
            doctest::Approx(-eval_derivative(spec, -x, 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("potential is even") {
  const auto spec = PotentialSpec::periodicized_gaussian(1.3, 0.6, kPi);
  for (int i = 0; i <= 48; ++i) {
    const double x = kPi * static_cast<double>(i) / 48.0;
    CHECK(eval_derivative(spec, x, 0) ==
          doctest::Approx(eval_derivative(spec, -x, 0)).epsilon(1e-12));
  }
}

TEST_CASE("potential constant reproduces the sup-norm oracle") {
  CHECK(potential_constant(PotentialSpec::cosine(1.0, 1.0, kPi)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto gauss = PotentialSpec::periodicized_gaussian(1.0, 1.0, kPi);
  double sup = 0.0;
  const std::size_t samples = 10000;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x =
        -kPi + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(samples);
    for (int order = 1; order <= 3; ++order)
      sup = std::max(sup, std::abs(eval_derivative(gauss, x, order)));
  }
  CHECK(potential_constant(gauss) == doctest::Approx(sup).epsilon(1e-6));
}

TEST_CASE("convolution with a mean-zero kernel kills constants") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  const std::vector<double> rho(64, 1.0 / (2.0 * kPi));
  for (int order = 0; order <= 2; ++order) {
    const auto out = convolve(spec, rho, order);
    for (const double v : out) CHECK(std::abs(v) <= 1e-12);
  }
}

TEST_CASE("convolution of a narrow bump reproduces the kernel shape") {
  const auto spec = PotentialSpec::periodicized_gaussian(1.0, 0.7, kPi);
  const std::size_t n = 64;
  const double dx = 2.0 * kPi / static_cast<double>(n);
  std::vector<double> rho(n, 0.0);
  const std::size_t i0 = 17;
  rho[i0] = 1.0 / dx;  // unit-mass bump at x0
  const double x0 = -kPi + static_cast<double>(i0) * dx;

  const auto out = convolve(spec, rho, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -kPi + static_cast<double>(i) * dx;
    CHECK(out[i] == doctest::Approx(eval_derivative(spec, x - x0, 0))
                        .epsilon(1e-6));
  }
}

TEST_CASE("odd kernel against even density vanishes at the center") {
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  const std::size_t n = 64;
  std::vector<double> rho(n, 0.0);
  // even about index n/2 (grid point x = 0)
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -kPi + 2.0 * kPi * static_cast<double>(i) /
                                static_cast<double>(n);
    rho[i] = std::exp(-2.0 * x * x);
  }
  const auto out = convolve(spec, rho, 1);
  CHECK(std::abs(out[n / 2]) <= 1e-10);
}

TEST_CASE("spectral convolution matches direct quadrature at every order") {
  const std::size_t n = 64;
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -kPi + 2.0 * kPi * static_cast<double>(i) /
                                static_cast<double>(n);
    rho[i] = std::exp(std::sin(x)) + 0.3 * std::cos(2.0 * x);
  }
  for (const auto& spec :
       {PotentialSpec::cosine(0.9, 1.0, kPi),
        PotentialSpec::periodicized_gaussian(1.0, 0.8, kPi)}) {
    for (int order = 0; order <= 2; ++order) {
      const auto fast = convolve(spec, rho, order);
      const auto slow = convolve_oracle(spec, rho, order);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-8));
    }
  }
}
