#pragma once

// Bloch-vector dynamics of the detector under the Markovian master equation
//
//   d rho / d tau = -i [Omega sigma_3 / 2, rho] + L[rho],
//   L[rho] = 1/2 sum_ij a_ij (2 sigma_j rho sigma_i - sigma_i sigma_j rho - rho sigma_i sigma_j),
//   a_ij = A delta_ij - i B eps_ij3 - A delta_i3 delta_j3.
//
// Rate convention: this dissipator damps the transverse components at 2A and
// the longitudinal one at 4A, with equilibrium omega_3 = -B/A. With
// A = gamma0 f / 4 the total decay rate is gamma_total = f (units of gamma0):
// transverse components decay as exp(-gamma_total tau / 2), the longitudinal
// one as exp(-gamma_total tau). Times are tau~ = gamma0 tau.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "csqfi/errors.hpp"

namespace csqfi::dynamics {

// |psi(0)> = cos(theta/2)|+> + e^{i phi} sin(theta/2)|->.
struct InitialState {
  double theta = 0.0;
  double phi = 0.0;

  static InitialState make(double theta, double phi = 0.0) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
      throw DomainError("theta must lie in [0, pi], got " + std::to_string(theta));
    }
    if (!std::isfinite(phi)) throw DomainError("phi must be finite");
    double wrapped = std::fmod(phi, 2.0 * std::numbers::pi);
    if (wrapped < 0.0) wrapped += 2.0 * std::numbers::pi;
    return {theta, wrapped};
  }

  // sin(theta) evaluated so that theta = pi gives exactly zero.
  double sin_theta() const {
    return theta > 0.5 * std::numbers::pi ? std::sin(std::numbers::pi - theta) : std::sin(theta);
  }
  double cos_theta() const { return std::cos(theta); }
};

struct BlochState {
  std::array<double, 3> omega{};
  std::array<double, 3> d_omega{};  // d omega / d nu

  double norm_squared() const {
    return omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2];
  }
};

struct EvolutionParams {
  double tau_tilde = 0.0;    // gamma0 tau
  double gamma_total = 1.0;  // units of gamma0; equals f in vacuum
  double b_over_a = 1.0;     // B / A: 1 in vacuum, 1 / (2N + 1) thermal
  double omega_eff = 1.0;    // level spacing Omega in units of gamma0

  void validate() const {
    if (!(tau_tilde >= 0.0) || !std::isfinite(tau_tilde)) {
      throw DomainError("tau_tilde must be finite and >= 0");
    }
    if (!(gamma_total > 0.0) || !std::isfinite(gamma_total)) {
      throw DomainError("gamma_total must be finite and > 0");
    }
    if (!(b_over_a > 0.0 && b_over_a <= 1.0)) throw DomainError("b_over_a must lie in (0, 1]");
    if (!std::isfinite(omega_eff)) throw DomainError("omega_eff must be finite");
  }
};

// Closed-form Bloch vector at tau_tilde. Derivative fields are zero.
inline BlochState bloch_evolve(const InitialState& init, const EvolutionParams& p) {
  p.validate();
  const double g = p.gamma_total;
  const double t = p.tau_tilde;
  const double transverse = init.sin_theta() * std::exp(-0.5 * g * t);
  const double phase = p.omega_eff * t + init.phi;
  BlochState s;
  s.omega[0] = transverse * std::cos(phase);
  s.omega[1] = transverse * std::sin(phase);
  // -b + (cos theta + b) e^{-g t}: exact fixed point for the ground state.
  s.omega[2] = -p.b_over_a + (init.cos_theta() + p.b_over_a) * std::exp(-g * t);
  return s;
}

// Closed form plus d omega / d nu, with nu entering only through
// gamma_total (Omega and b_over_a are nu-independent).
inline BlochState bloch_evolve_with_dnu(const InitialState& init, const EvolutionParams& p,
                                        double dg_dnu) {
  BlochState s = bloch_evolve(init, p);
  const double t = p.tau_tilde;
  s.d_omega[0] = -0.5 * t * dg_dnu * s.omega[0];
  s.d_omega[1] = -0.5 * t * dg_dnu * s.omega[1];
  s.d_omega[2] = -t * dg_dnu * (init.cos_theta() + p.b_over_a) * std::exp(-p.gamma_total * t);
  return s;
}

namespace detail {

using Complex = std::complex<double>;
using Mat2 = std::array<std::array<Complex, 2>, 2>;

inline Mat2 mul(const Mat2& x, const Mat2& y) {
  Mat2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
  return r;
}

inline Mat2 axpy(const Mat2& x, Complex a, const Mat2& y) {
  Mat2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = x[i][j] + a * y[i][j];
  return r;
}

inline const std::array<Mat2, 3>& pauli() {
  static const std::array<Mat2, 3> s = {
      Mat2{{{Complex(0, 0), Complex(1, 0)}, {Complex(1, 0), Complex(0, 0)}}},
      Mat2{{{Complex(0, 0), Complex(0, -1)}, {Complex(0, 1), Complex(0, 0)}}},
      Mat2{{{Complex(1, 0), Complex(0, 0)}, {Complex(0, 0), Complex(-1, 0)}}}};
  return s;
}

// Right-hand side of the master equation for the 2x2 density matrix.
struct MasterEquation {
  std::array<std::array<Complex, 3>, 3> a{};
  double omega = 0.0;

  MasterEquation(double a_coeff, double b_coeff, double omega_eff) : omega(omega_eff) {
    const Complex i(0, 1);
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        Complex v = (p == q ? a_coeff : 0.0);
        if (p == 0 && q == 1) v -= i * b_coeff;  // eps_123 = +1
        if (p == 1 && q == 0) v += i * b_coeff;  // eps_213 = -1
        if (p == 2 && q == 2) v -= a_coeff;
        a[p][q] = v;
      }
    }
  }

  Mat2 operator()(const Mat2& rho) const {
    const auto& s = pauli();
    const Complex i(0, 1);
    // -i [H, rho] with H = Omega sigma_3 / 2.
    Mat2 h = s[2];
    for (auto& row : h)
      for (auto& x : row) x *= 0.5 * omega;
    Mat2 out = axpy(mul(rho, h), -1.0, mul(h, rho));
    for (auto& row : out)
      for (auto& x : row) x *= i;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        if (a[p][q] == Complex(0, 0)) continue;
        const Mat2 sp_sq = mul(s[p], s[q]);
        Mat2 term = mul(mul(s[q], rho), s[p]);
        for (auto& row : term)
          for (auto& x : row) x *= 2.0;
        term = axpy(term, -1.0, mul(sp_sq, rho));
        term = axpy(term, -1.0, mul(rho, sp_sq));
        out = axpy(out, 0.5 * a[p][q], term);
      }
    }
    return out;
  }
};

}  // namespace detail

// Fixed-step RK4 integration of the density-matrix master equation, used as
// an independent check of bloch_evolve. A = gamma_total / 4, B = b_over_a A.
inline BlochState lindblad_integrate(const InitialState& init, const EvolutionParams& p,
                                     int steps) {
  using detail::Complex;
  using detail::Mat2;
  p.validate();
  if (steps < 1) throw DomainError("steps must be >= 1");

  const double a_coeff = 0.25 * p.gamma_total;
  const detail::MasterEquation rhs(a_coeff, p.b_over_a * a_coeff, p.omega_eff);

  const double c = std::cos(0.5 * init.theta);
  const double sn = std::sin(0.5 * init.theta);
  const Complex e = std::polar(1.0, init.phi);
  // |psi> = (c, e s) in the (|+>, |->) basis.
  Mat2 rho{{{Complex(c * c, 0), c * sn * std::conj(e)}, {c * sn * e, Complex(sn * sn, 0)}}};

  const double h = p.tau_tilde / steps;
  if (h > 0.0) {
    for (int n = 0; n < steps; ++n) {
      const Mat2 k1 = rhs(rho);
      const Mat2 k2 = rhs(detail::axpy(rho, 0.5 * h, k1));
      const Mat2 k3 = rhs(detail::axpy(rho, 0.5 * h, k2));
      const Mat2 k4 = rhs(detail::axpy(rho, h, k3));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          rho[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
    }
  }

  BlochState s;
  s.omega[0] = 2.0 * rho[0][1].real();
  s.omega[1] = -2.0 * rho[0][1].imag();
  s.omega[2] = (rho[0][0] - rho[1][1]).real();
  return s;
}

}  // namespace csqfi::dynamics
