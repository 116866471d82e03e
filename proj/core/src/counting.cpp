#include "hvlab/counting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "hvlab/phasefield.hpp"

namespace hvlab {

namespace {

constexpr std::size_t kMaxDenseParticles = 16;

void check_alpha(std::span<const Complex> alpha, std::size_t dim) {
  if (alpha.size() != dim) {
    throw std::invalid_argument("reference state dimension mismatch");
  }
  double n2 = 0.0;
  for (const auto& a : alpha) n2 += std::norm(a);
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-10) {
    throw std::invalid_argument("reference state must be normalized");
  }
}

void check_state(const DiscreteState& state) {
  if (state.dim == 0 || state.particles == 0) {
    throw std::invalid_argument("empty discrete state");
  }
  if (state.particles > kMaxDenseParticles) {
    throw std::invalid_argument("particle count too large for dense states");
  }
  std::size_t expected = 1;
  for (std::size_t i = 0; i < state.particles; ++i) expected *= state.dim;
  if (state.amplitudes.size() != expected) {
    throw std::invalid_argument("amplitude vector has wrong length");
  }
}

std::size_t particle_stride(const DiscreteState& state, std::size_t j) {
  std::size_t s = 1;
  for (std::size_t i = j; i < state.particles; ++i) s *= state.dim;
  return s;
}

// Unvalidated p_j; complement = true gives q_j.
DiscreteState project(std::span<const Complex> alpha, std::size_t j,
                      const DiscreteState& state, bool complement) {
  const std::size_t d = state.dim;
  const std::size_t stride = particle_stride(state, j);
  const std::size_t block = stride * d;
  DiscreteState out{state.dim, state.particles,
                    std::vector<Complex>(state.amplitudes.size())};
  for (std::size_t base = 0; base < state.amplitudes.size(); base += block) {
    for (std::size_t in = 0; in < stride; ++in) {
      Complex s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        s += std::conj(alpha[i]) * state.amplitudes[base + i * stride + in];
      }
      for (std::size_t i = 0; i < d; ++i) {
        const std::size_t idx = base + i * stride + in;
        const Complex p = alpha[i] * s;
        out.amplitudes[idx] =
            complement ? state.amplitudes[idx] - p : p;
      }
    }
  }
  return out;
}

// All P_k^j components over the last j particles, k = 0..j.
std::vector<DiscreteState> pk_components(std::span<const Complex> alpha,
                                         std::size_t j,
                                         const DiscreteState& state) {
  const std::size_t n = state.particles;
  std::vector<DiscreteState> sums(
      j + 1, DiscreteState{state.dim, state.particles,
                           std::vector<Complex>(state.amplitudes.size())});
  for (std::size_t mask = 0; mask < (std::size_t{1} << j); ++mask) {
    DiscreteState term = state;
    std::size_t k = 0;
    for (std::size_t i = 0; i < j; ++i) {
      const bool orthogonal = (mask >> i) & 1u;
      term = project(alpha, n - j + i + 1, term, orthogonal);
      if (orthogonal) ++k;
    }
    sums[k] += term;
  }
  return sums;
}

void check_particle_index(const DiscreteState& state, std::size_t j) {
  if (j == 0 || j > state.particles) {
    throw std::invalid_argument("particle index out of range");
  }
}

}  // namespace

double DiscreteState::norm() const {
  double n2 = 0.0;
  for (const auto& a : amplitudes) n2 += std::norm(a);
  return std::sqrt(n2);
}

DiscreteState& DiscreteState::operator+=(const DiscreteState& other) {
  if (other.amplitudes.size() != amplitudes.size()) {
    throw std::invalid_argument("state size mismatch");
  }
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    amplitudes[i] += other.amplitudes[i];
  }
  return *this;
}

DiscreteState& DiscreteState::operator*=(double factor) {
  for (auto& a : amplitudes) a *= factor;
  return *this;
}

DiscreteState product_state(std::span<const Complex> alpha,
                            std::size_t particles) {
  if (alpha.empty() || particles == 0 || particles > kMaxDenseParticles) {
    throw std::invalid_argument("invalid product state shape");
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < particles; ++i) total *= alpha.size();
  DiscreteState out{alpha.size(), particles, std::vector<Complex>(total)};
  for (std::size_t idx = 0; idx < total; ++idx) {
    Complex v = 1.0;
    std::size_t rem = idx;
    for (std::size_t p = 0; p < particles; ++p) {
      const std::size_t s = particle_stride(out, p + 1);
      v *= alpha[rem / s];
      rem %= s;
    }
    out.amplitudes[idx] = v;
  }
  return out;
}

Complex inner(const DiscreteState& a, const DiscreteState& b) {
  if (a.amplitudes.size() != b.amplitudes.size()) {
    throw std::invalid_argument("state size mismatch");
  }
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
    s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  }
  return s;
}

DiscreteState symmetrized(const DiscreteState& state) {
  check_state(state);
  if (state.particles > 8) {
    throw std::invalid_argument("too many particles to symmetrize densely");
  }
  std::vector<std::size_t> perm(state.particles);
  std::iota(perm.begin(), perm.end(), 0);
  DiscreteState out{state.dim, state.particles,
                    std::vector<Complex>(state.amplitudes.size())};
  std::size_t count = 0;
  do {
    for (std::size_t idx = 0; idx < state.amplitudes.size(); ++idx) {
      std::size_t rem = idx;
      std::array<std::size_t, 8> digits{};
      for (std::size_t p = 0; p < state.particles; ++p) {
        const std::size_t s = particle_stride(state, p + 1);
        digits[p] = rem / s;
        rem %= s;
      }
      std::size_t target = 0;
      for (std::size_t p = 0; p < state.particles; ++p) {
        target += digits[perm[p]] * particle_stride(state, p + 1);
      }
      out.amplitudes[target] += state.amplitudes[idx];
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  out *= 1.0 / static_cast<double>(count);
  return out;
}

DiscreteState apply_p(std::span<const Complex> alpha, std::size_t j,
                      const DiscreteState& state) {
  check_state(state);
  check_alpha(alpha, state.dim);
  check_particle_index(state, j);
  return project(alpha, j, state, false);
}

DiscreteState apply_q(std::span<const Complex> alpha, std::size_t j,
                      const DiscreteState& state) {
  check_state(state);
  check_alpha(alpha, state.dim);
  check_particle_index(state, j);
  return project(alpha, j, state, true);
}

DiscreteState apply_pk(std::span<const Complex> alpha, std::size_t k,
                       std::size_t j, const DiscreteState& state) {
  check_state(state);
  check_alpha(alpha, state.dim);
  if (j == 0 || j > state.particles) {
    throw std::invalid_argument("projection block size out of range");
  }
  if (k > j) {
    return DiscreteState{state.dim, state.particles,
                         std::vector<Complex>(state.amplitudes.size())};
  }
  return pk_components(alpha, j, state)[k];
}

DiscreteState apply_pk(std::span<const Complex> alpha, std::size_t k,
                       const DiscreteState& state) {
  return apply_pk(alpha, k, state.particles, state);
}

CountingWeight CountingWeight::ones(std::size_t n_particles) {
  return CountingWeight{std::vector<double>(n_particles + 1, 1.0), 0};
}

CountingWeight CountingWeight::n_counting(std::size_t n_particles) {
  CountingWeight w{std::vector<double>(n_particles + 1), 0};
  for (std::size_t k = 0; k <= n_particles; ++k) {
    w.values[k] = std::sqrt(static_cast<double>(k) /
                            static_cast<double>(n_particles));
  }
  return w;
}

CountingWeight CountingWeight::m_lambda(std::size_t n_particles,
                                        double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  const double scale = std::pow(static_cast<double>(n_particles), lambda);
  CountingWeight w{std::vector<double>(n_particles + 1), 0};
  for (std::size_t k = 0; k <= n_particles; ++k) {
    w.values[k] = std::min(static_cast<double>(k) / scale, 1.0);
  }
  return w;
}

CountingWeight CountingWeight::m_lambda_difference(std::size_t n_particles,
                                                   double lambda,
                                                   std::ptrdiff_t l) {
  const CountingWeight m = m_lambda(n_particles, lambda);
  const double window = std::pow(static_cast<double>(n_particles), lambda) +
                        static_cast<double>(std::abs(l));
  CountingWeight w{std::vector<double>(n_particles + 1, 0.0), 0};
  auto value = [&](std::ptrdiff_t k) {
    if (k < 0 || k > static_cast<std::ptrdiff_t>(n_particles)) return 0.0;
    return m.values[static_cast<std::size_t>(k)];
  };
  for (std::size_t k = 0; k <= n_particles; ++k) {
    const auto ks = static_cast<std::ptrdiff_t>(k);
    if (static_cast<double>(ks) >= -static_cast<double>(std::abs(l)) &&
        static_cast<double>(ks) <= window) {
      w.values[k] = value(ks) - value(ks - l);
    }
  }
  return w;
}

CountingWeight CountingWeight::shifted(std::ptrdiff_t l) const {
  CountingWeight w = *this;
  w.shift += l;
  return w;
}

DiscreteState apply_weight(const CountingWeight& weight,
                           std::span<const Complex> alpha,
                           const DiscreteState& state) {
  check_state(state);
  check_alpha(alpha, state.dim);
  auto components = pk_components(alpha, state.particles, state);
  DiscreteState out{state.dim, state.particles,
                    std::vector<Complex>(state.amplitudes.size())};
  for (std::size_t m = 0; m < components.size(); ++m) {
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(m) - weight.shift;
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(weight.values.size())) {
      continue;
    }
    const double f = weight.values[static_cast<std::size_t>(k)];
    if (f == 0.0) continue;
    DiscreteState scaled = components[m];
    scaled *= f;
    out += scaled;
  }
  return out;
}

double beta_exact(std::span<const Complex> alpha, const DiscreteState& state,
                  double lambda) {
  check_state(state);
  check_alpha(alpha, state.dim);
  if (std::abs(state.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("state must be normalized");
  }
  const CountingWeight m = CountingWeight::m_lambda(state.particles, lambda);
  auto components = pk_components(alpha, state.particles, state);
  double beta = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const double n2 = components[k].norm();
    beta += m.values[k] * n2 * n2;
  }
  return beta;
}

// ---- Exact N=2 grid-state path ----------------------------------------------

namespace {

struct PairShape {
  std::size_t n0 = 0;  // particle position axis
  std::size_t n1 = 0;  // particle conjugate axis
  double block_weight = 0.0;  // one-particle quadrature cell
};

PairShape check_pair_for_projection(const ComplexField& alpha,
                                    const ComplexField& pair) {
  const PhaseGrid& g = pair.grid();
  if (g.axis_count() != 4) {
    throw std::invalid_argument("pair field must have four axes");
  }
  for (std::size_t a : {std::size_t{0}, std::size_t{1}}) {
    if (g.axis(a).n != g.axis(a + 2).n ||
        g.axis(a).halfwidth != g.axis(a + 2).halfwidth) {
      throw std::invalid_argument("pair field particle blocks differ");
    }
  }
  const PhaseGrid& ag = alpha.grid();
  if (ag.axis_count() != 2 || ag.kind() != g.kind() ||
      ag.axis(0).n != g.axis(0).n ||
      ag.axis(0).halfwidth != g.axis(0).halfwidth ||
      ag.axis(1).n != g.axis(1).n ||
      ag.axis(1).halfwidth != g.axis(1).halfwidth) {
    throw std::invalid_argument("reference grid does not match pair blocks");
  }
  if (std::abs(alpha.l2_norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("reference state must be normalized");
  }
  return PairShape{g.axis(0).n, g.axis(1).n,
                   ag.axis(0).spacing() * ag.axis(1).spacing()};
}

// Single-sweep reductions of a pair field against the reference: the
// projection coefficients s1(i2) = w sum_i1 conj(a[i1]) psi[i1, i2] and
// s2(i1) = w sum_i2 conj(a[i2]) psi[i1, i2], the rank-one coefficient
// c = <a (x) a, psi>, and the squared norm, all with quadrature weights.
struct PairReduction {
  std::vector<Complex> s1;
  std::vector<Complex> s2;
  Complex c = 0.0;
  double norm2 = 0.0;
};

PairReduction reduce_pair(const ComplexField& alpha_hat,
                          std::span<const Complex> psi,
                          const PairShape& shape) {
  const std::size_t block = shape.n0 * shape.n1;
  const double w = shape.block_weight;
  auto a = alpha_hat.values();
  PairReduction r;
  r.s1.assign(block, Complex{0.0});
  r.s2.assign(block, Complex{0.0});
  std::vector<double> row_norms(block, 0.0);
  for (std::size_t i1 = 0; i1 < block; ++i1) {
    const Complex ca = std::conj(a[i1]);
    const Complex* row = psi.data() + i1 * block;
    Complex dot = 0.0;
    double n2 = 0.0;
    for (std::size_t i2 = 0; i2 < block; ++i2) {
      r.s1[i2] += ca * row[i2];
      dot += std::conj(a[i2]) * row[i2];
      n2 += std::norm(row[i2]);
    }
    r.s2[i1] = w * dot;
    row_norms[i1] = n2;
  }
  Complex c = 0.0;
  double n2 = 0.0;
  for (std::size_t i = 0; i < block; ++i) {
    r.s1[i] *= w;
    c += std::conj(a[i]) * r.s2[i];
    n2 += row_norms[i];
  }
  r.c = w * c;
  r.norm2 = w * w * n2;
  return r;
}

// <psi, M chi> for M = m0 P1P2 + m1 (P1 Q2 + Q1 P2) + m2 Q1Q2 from the
// reductions of both fields and the plain inner product <psi, chi>.
Complex weight_form(const CountingWeight& m, const PairReduction& rp,
                    const PairReduction& rc, Complex psi_chi, double w) {
  Complex p1 = 0.0;
  Complex p2 = 0.0;
  for (std::size_t i = 0; i < rp.s1.size(); ++i) {
    p1 += std::conj(rp.s1[i]) * rc.s1[i];
    p2 += std::conj(rp.s2[i]) * rc.s2[i];
  }
  p1 *= w;
  p2 *= w;
  const Complex p12 = std::conj(rp.c) * rc.c;
  const double m0 = m.values[0];
  const double m1 = m.values[1];
  const double m2 = m.values[2];
  return m2 * psi_chi + (m1 - m2) * (p1 + p2) + (m0 - 2.0 * m1 + m2) * p12;
}

Complex weighted_inner(const ComplexField& a, const ComplexField& b) {
  std::vector<double> re(a.values().size());
  std::vector<double> im(a.values().size());
  for (std::size_t i = 0; i < re.size(); ++i) {
    const Complex v = std::conj(a[i]) * b[i];
    re[i] = v.real();
    im[i] = v.imag();
  }
  const double w = a.grid().cell_volume();
  return Complex{pairwise_sum(re) * w, pairwise_sum(im) * w};
}

}  // namespace

ComplexField pair_apply_p(const ComplexField& alpha_hat,
                          const ComplexField& pair, std::size_t particle) {
  const PairShape shape = check_pair_for_projection(alpha_hat, pair);
  if (particle != 1 && particle != 2) {
    throw std::invalid_argument("particle index must be 1 or 2");
  }
  const std::size_t n0 = shape.n0;
  const std::size_t n1 = shape.n1;
  const std::size_t block = n0 * n1;
  std::vector<Complex> out(pair.values().size());
  auto a = alpha_hat.values();
  auto psi = pair.values();
  if (particle == 1) {
    std::vector<Complex> s(block, Complex{0.0});
    for (std::size_t self = 0; self < block; ++self) {
      const Complex c = std::conj(a[self]);
      const Complex* row = psi.data() + self * block;
      for (std::size_t other = 0; other < block; ++other) {
        s[other] += c * row[other];
      }
    }
    for (std::size_t self = 0; self < block; ++self) {
      const Complex c = a[self] * shape.block_weight;
      Complex* row = out.data() + self * block;
      for (std::size_t other = 0; other < block; ++other) {
        row[other] = c * s[other];
      }
    }
  } else {
    for (std::size_t other = 0; other < block; ++other) {
      Complex s = 0.0;
      for (std::size_t self = 0; self < block; ++self) {
        s += std::conj(a[self]) * psi[other * block + self];
      }
      s *= shape.block_weight;
      for (std::size_t self = 0; self < block; ++self) {
        out[other * block + self] = a[self] * s;
      }
    }
  }
  return ComplexField(pair.grid(), std::move(out));
}

ComplexField pair_apply_m_lambda(const ComplexField& alpha_hat,
                                 const ComplexField& pair, double lambda) {
  const CountingWeight m = CountingWeight::m_lambda(2, lambda);
  const ComplexField p1 = pair_apply_p(alpha_hat, pair, 1);
  const ComplexField p2 = pair_apply_p(alpha_hat, pair, 2);
  const ComplexField p12 = pair_apply_p(alpha_hat, p1, 2);
  std::vector<Complex> out(pair.values().size());
  const double m0 = m.values[0];
  const double m1 = m.values[1];
  const double m2 = m.values[2];
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Complex both = p12[i];
    const Complex one = p1[i] + p2[i] - 2.0 * both;
    const Complex none = pair[i] - p1[i] - p2[i] + both;
    out[i] = m0 * both + m1 * one + m2 * none;
  }
  return ComplexField(pair.grid(), std::move(out));
}

double beta_pair(const ComplexField& alpha_hat, const ComplexField& pair,
                 double lambda) {
  const PairShape shape = check_pair_for_projection(alpha_hat, pair);
  const CountingWeight m = CountingWeight::m_lambda(2, lambda);
  const PairReduction r = reduce_pair(alpha_hat, pair.values(), shape);
  return weight_form(m, r, r, Complex{r.norm2}, shape.block_weight).real();
}

double pair_q1_expectation(const ComplexField& alpha_hat,
                           const ComplexField& pair) {
  const PairShape shape = check_pair_for_projection(alpha_hat, pair);
  const PairReduction r = reduce_pair(alpha_hat, pair.values(), shape);
  double n1 = 0.0;
  for (const Complex& s : r.s1) n1 += std::norm(s);
  return 1.0 - shape.block_weight * n1;
}

double beta_rhs(const ComplexField& alpha_hat, const ComplexField& pair,
                const PotentialSpec& spec, double lambda) {
  const PairShape shape = check_pair_for_projection(alpha_hat, pair);
  if (pair.grid().kind() != CoordinateKind::PositionXi) {
    throw std::invalid_argument("derivative integrand needs a transformed pair state");
  }
  if (pair_swap_asymmetry(pair) > 1e-8 * std::max(pair.l2_norm(), 1.0)) {
    throw std::invalid_argument("pair state must be swap symmetric");
  }
  const Axis& xaxis = pair.grid().axis(0);
  const Axis& caxis = pair.grid().axis(1);
  const std::size_t nx = shape.n0;
  const std::size_t nc = shape.n1;

  // Mean-field multiplier (V * |a|^2)(x, xi) = -xi (G' * rho)(x) + (G' * sigma)(x)
  // from the xi-moments of |alpha_hat|^2.
  std::vector<double> rho(nx, 0.0);
  std::vector<double> sigma(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      const double a2 = std::norm(alpha_hat[i * nc + j]);
      rho[i] += a2;
      sigma[i] += caxis.coordinate(j) * a2;
    }
  }
  const double dxi = caxis.spacing();
  for (std::size_t i = 0; i < nx; ++i) {
    rho[i] *= dxi;
    sigma[i] *= dxi;
  }
  const std::vector<double> grho = convolve(spec, rho, 1);
  const std::vector<double> gsigma = convolve(spec, sigma, 1);

  std::vector<Complex> phi(pair.values().size());
  std::size_t idx = 0;
  for (std::size_t i1 = 0; i1 < nx; ++i1) {
    const double x1 = xaxis.coordinate(i1);
    for (std::size_t j1 = 0; j1 < nc; ++j1) {
      const double xi1 = caxis.coordinate(j1);
      const double mf1 = -xi1 * grho[i1] + gsigma[i1];
      for (std::size_t i2 = 0; i2 < nx; ++i2) {
        const double gp = eval_derivative(
            spec, wrap_position(x1 - xaxis.coordinate(i2), xaxis.halfwidth), 1);
        const double mf2_base = gsigma[i2];
        const double mf2_slope = -grho[i2];
        for (std::size_t j2 = 0; j2 < nc; ++j2, ++idx) {
          const double xi2 = caxis.coordinate(j2);
          const double v12 = -gp * (xi1 - xi2);
          phi[idx] = (v12 - mf1 - (mf2_base + mf2_slope * xi2)) * pair[idx];
        }
      }
    }
  }
  const CountingWeight m = CountingWeight::m_lambda(2, lambda);
  const PairReduction rp = reduce_pair(alpha_hat, pair.values(), shape);
  const PairReduction rc = reduce_pair(alpha_hat, phi, shape);
  Complex psi_chi = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    psi_chi += std::conj(pair[i]) * phi[i];
  }
  psi_chi *= shape.block_weight * shape.block_weight;
  return 2.0 * weight_form(m, rp, rc, psi_chi, shape.block_weight).imag();
}

// ---- Cutoff and operator-norm audits ----------------------------------------

double CutoffSpec::profile(double u) const {
  const double r = std::abs(u);
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double y = r - 1.0;
  const double y4 = y * y * y * y;
  return 1.0 - y4 * (35.0 + y * (-84.0 + y * (70.0 - 20.0 * y)));
}

double CutoffSpec::value(double xi) const {
  if (radius <= 0.0) {
    throw std::invalid_argument("cutoff radius must be positive");
  }
  return profile(xi / radius);
}

CutoffResidual cutoff_residual(const ComplexField& field,
                               const CutoffSpec& cutoff,
                               double second_deriv_norm) {
  const PhaseGrid& g = field.grid();
  if (g.axis_count() != 2 || g.kind() != CoordinateKind::PositionXi) {
    throw std::invalid_argument("cutoff audit needs a transformed one-particle field");
  }
  const Axis& caxis = g.axis(1);
  const std::size_t nc = caxis.n;
  std::vector<double> terms(field.values().size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double xi = caxis.coordinate(i % nc);
    const double w = (1.0 - cutoff.value(xi)) * xi;
    terms[i] = w * w * std::norm(field[i]);
  }
  CutoffResidual out;
  out.lhs = std::sqrt(pairwise_sum(terms) * g.cell_volume());
  const double d2 = second_deriv_norm < 0.0 ? second_derivative_norm(field)
                                            : second_deriv_norm;
  out.rhs = d2 / cutoff.radius;
  return out;
}

std::vector<OpNormResiduals> opnorm_residuals(const ComplexField& alpha_hat,
                                              const PotentialSpec& spec,
                                              std::size_t trials,
                                              std::uint64_t seed) {
  const PhaseGrid& ag = alpha_hat.grid();
  if (ag.axis_count() != 2 || ag.kind() != CoordinateKind::PositionXi) {
    throw std::invalid_argument("operator audit needs a transformed one-particle field");
  }
  const Axis& xaxis = ag.axis(0);
  const Axis& caxis = ag.axis(1);
  const PhaseGrid pair_grid(CoordinateKind::PositionXi,
                            {xaxis, caxis, xaxis, caxis});
  const double c_gamma = potential_constant(spec);
  const double m1 = sobolev_norm(alpha_hat, 1);
  const std::size_t nx = xaxis.n;
  const std::size_t nc = caxis.n;

  // Gradient-of-reference norm |||xi| alpha||.
  std::vector<double> grad_terms(alpha_hat.values().size());
  for (std::size_t i = 0; i < grad_terms.size(); ++i) {
    const double xi = caxis.coordinate(i % nc);
    grad_terms[i] = xi * xi * std::norm(alpha_hat[i]);
  }
  const double grad_norm =
      std::sqrt(pairwise_sum(grad_terms) * ag.cell_volume());

  // Mean-field multiplier profile over x (same moments as the solver).
  std::vector<double> rho(nx, 0.0);
  std::vector<double> sigma(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      const double a2 = std::norm(alpha_hat[i * nc + j]);
      rho[i] += a2;
      sigma[i] += caxis.coordinate(j) * a2;
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    rho[i] *= caxis.spacing();
    sigma[i] *= caxis.spacing();
  }
  const std::vector<double> grho = convolve(spec, rho, 1);
  const std::vector<double> gsigma = convolve(spec, sigma, 1);

  std::vector<OpNormResiduals> out;
  out.reserve(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const ComplexField psi = random_state(seed + trial, pair_grid, 2);
    const ComplexField p1 = pair_apply_p(alpha_hat, psi, 1);
    const ComplexField p12 = pair_apply_p(alpha_hat, p1, 2);

    std::vector<double> t_pair(psi.values().size());
    std::vector<double> t_mf(psi.values().size());
    std::vector<double> t_xi(psi.values().size());
    std::size_t idx = 0;
    for (std::size_t i1 = 0; i1 < nx; ++i1) {
      const double x1 = xaxis.coordinate(i1);
      const double mf_slope = -grho[i1];
      const double mf_base = gsigma[i1];
      for (std::size_t j1 = 0; j1 < nc; ++j1) {
        const double xi1 = caxis.coordinate(j1);
        const double mf = mf_slope * xi1 + mf_base;
        for (std::size_t i2 = 0; i2 < nx; ++i2) {
          const double gp = eval_derivative(
              spec, wrap_position(x1 - xaxis.coordinate(i2), xaxis.halfwidth),
              1);
          for (std::size_t j2 = 0; j2 < nc; ++j2, ++idx) {
            const double v12 = -gp * (xi1 - caxis.coordinate(j2));
            t_pair[idx] = v12 * v12 * std::norm(p12[idx]);
            t_mf[idx] = mf * mf * std::norm(p1[idx]);
            t_xi[idx] = xi1 * xi1 * std::norm(p1[idx]);
          }
        }
      }
    }
    const double vol = pair_grid.cell_volume();
    OpNormResiduals r;
    r.pair_potential =
        c_gamma * m1 * m1 - std::sqrt(pairwise_sum(t_pair) * vol);
    r.mean_field_potential =
        c_gamma * m1 * m1 - std::sqrt(pairwise_sum(t_mf) * vol);
    r.xi_projection = grad_norm - std::sqrt(pairwise_sum(t_xi) * vol);
    out.push_back(r);
  }
  return out;
}

// ---- Monte Carlo <q_1> estimator ---------------------------------------------

McEstimate estimate_q1(const Trajectory& alpha_traj,
                       const ProductInitialData& data,
                       const PotentialSpec& spec, double t,
                       const McParams& mc) {
  if (mc.samples == 0) throw std::invalid_argument("need at least one sample");
  if (mc.dt <= 0.0) throw std::invalid_argument("step size must be positive");
  if (data.n_particles < 2) {
    throw std::invalid_argument("need at least two particles");
  }
  const PhaseGrid& fg = data.factor.grid();
  if (fg.axis_count() != 2 || fg.kind() != CoordinateKind::PositionVelocity) {
    throw std::invalid_argument("factor must be a one-particle kinetic field");
  }
  std::size_t snap = alpha_traj.times.size();
  for (std::size_t i = 0; i < alpha_traj.times.size(); ++i) {
    if (std::abs(alpha_traj.times[i] - t) <= 1e-9) snap = i;
  }
  if (snap == alpha_traj.times.size()) {
    throw std::invalid_argument("no trajectory snapshot at the requested time");
  }
  ComplexField alpha_t = alpha_traj.fields[snap];
  if (alpha_t.grid().kind() == CoordinateKind::PositionXi) {
    alpha_t = inverse_velocity_fourier(alpha_t);
  }

  const SpectralInterpolant interp_alpha(alpha_t);
  const SpectralInterpolant interp_factor(data.factor);

  // Quadrature nodes for the z1 integrals on the factor's box.
  const Axis& xaxis = fg.axis(0);
  const Axis& vaxis = fg.axis(1);
  const double node_dx = 2.0 * xaxis.halfwidth / static_cast<double>(mc.z1_nx);
  const double node_dv = 2.0 * vaxis.halfwidth / static_cast<double>(mc.z1_nv);
  const double node_weight = node_dx * node_dv;
  const std::size_t node_count = mc.z1_nx * mc.z1_nv;
  std::vector<double> node_x(node_count);
  std::vector<double> node_v(node_count);
  std::vector<Complex> node_alpha(node_count);
  for (std::size_t i = 0; i < mc.z1_nx; ++i) {
    for (std::size_t j = 0; j < mc.z1_nv; ++j) {
      const std::size_t id = i * mc.z1_nv + j;
      node_x[id] = -xaxis.halfwidth + static_cast<double>(i) * node_dx;
      node_v[id] = -vaxis.halfwidth + static_cast<double>(j) * node_dv;
      const std::array<double, 2> z{node_x[id], node_v[id]};
      node_alpha[id] = std::conj(interp_alpha(z));
    }
  }

  // Categorical sampling table over factor grid cells.
  std::vector<double> cdf(fg.point_count());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += std::norm(data.factor[i]);
    cdf[i] = acc;
  }
  if (acc <= 0.0) throw std::invalid_argument("factor has zero mass");

  const std::size_t n = data.n_particles;
  const std::size_t nv = vaxis.n;
  std::vector<double> ratio(mc.samples,
                            std::numeric_limits<double>::quiet_NaN());

  auto run_sample = [&](std::size_t index) {
    std::mt19937_64 rng(mc.seed + index);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    NBodyState state;
    state.positions.resize(n);
    state.velocities.resize(n);
    state.time = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double u = uni(rng) * acc;
      const std::size_t cell = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const std::size_t ci = std::min(cell, cdf.size() - 1);
      const double jx = uni(rng) - 0.5;
      const double jv = uni(rng) - 0.5;
      state.positions[m] = wrap_position(
          xaxis.coordinate(ci / nv) + jx * xaxis.spacing(), xaxis.halfwidth);
      state.velocities[m] = vaxis.coordinate(ci % nv) + jv * vaxis.spacing();
    }
    const NBodyState forward = flow_nbody(spec, state, t, mc.dt);

    Complex g = 0.0;
    double h = 0.0;
    NBodyState probe = forward;
    for (std::size_t id = 0; id < node_count; ++id) {
      probe.positions[0] = node_x[id];
      probe.velocities[0] = node_v[id];
      probe.time = t;
      const NBodyState back = flow_nbody(spec, probe, 0.0, mc.dt);
      Complex val = 1.0;
      for (std::size_t m = 0; m < n; ++m) {
        const std::array<double, 2> z{back.positions[m], back.velocities[m]};
        val *= interp_factor(z);
      }
      g += node_alpha[id] * val;
      h += std::norm(val);
    }
    g *= node_weight;
    h *= node_weight;
    if (h >= std::numeric_limits<double>::min()) {
      ratio[index] = std::norm(g) / h;
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, mc.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < mc.samples; ++i) run_sample(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < mc.samples; i += threads) run_sample(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  McEstimate out;
  std::vector<double> accepted;
  accepted.reserve(mc.samples);
  for (double r : ratio) {
    if (std::isnan(r)) {
      ++out.rejected;
    } else {
      accepted.push_back(r);
    }
  }
  if (accepted.empty()) {
    throw std::runtime_error("all samples rejected (vanishing tail marginal)");
  }
  if (out.rejected * 100 > mc.samples) {
    std::fprintf(stderr,
                 "estimate_q1: %zu of %zu samples rejected for vanishing tail "
                 "marginal\n",
                 out.rejected, mc.samples);
  }
  const double mean =
      pairwise_sum(accepted) / static_cast<double>(accepted.size());
  double var = 0.0;
  for (double r : accepted) var += (r - mean) * (r - mean);
  if (accepted.size() > 1) {
    var /= static_cast<double>(accepted.size() - 1);
  }
  out.estimate = 1.0 - mean;
  out.std_error = std::sqrt(var / static_cast<double>(accepted.size()));
  return out;
}

}  // namespace hvlab
