#pragma once

// Quantum Fisher information of the deficit parameter nu.
//
// For a qubit rho = (I + omega . sigma) / 2 the QFI of a parameter lambda is
//   F = |d omega|^2 + (omega . d omega)^2 / (1 - |omega|^2)   (mixed state)
//   F = |d omega|^2                                             (pure state)
// With the vacuum evolution and gamma_total = f this reduces to
//   F = e^{-f tau} (df)^2 tau^2 cos^2(theta/2) (2 e^{f tau} - 1 + cos theta)
//       / (2 (e^{f tau} - 1)),
// which is maximal at theta = 0 and identically zero at theta = pi.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "csqfi/dynamics.hpp"
#include "csqfi/errors.hpp"
#include "csqfi/response.hpp"

namespace csqfi::metrology {

// States with |omega| >= 1 - kPureThreshold are treated as pure.
inline constexpr double kPureThreshold = 1e-9;

// Every setting that enters a QFI evaluation.
struct DetectorConfig {
  response::Polarization pol;
  double r_tilde = 0.1;
  double nu = 1.5;
  double tau_tilde = 1.0;
  double theta = 0.0;
  double phi = 0.0;

  bool operator==(const DetectorConfig&) const = default;
};

struct QfiResult {
  double fisher = 0.0;
  DetectorConfig point;
  double crlb_single = std::numeric_limits<double>::infinity();
  response::ResponseValue response;  // f and df/dnu at the point
};

inline double qfi_bloch(const dynamics::BlochState& s) {
  const double norm2 = s.norm_squared();
  const double norm = std::sqrt(norm2);
  if (norm > 1.0 + kPureThreshold) {
    throw InvalidStateError("Bloch vector length " + std::to_string(norm) + " exceeds 1");
  }
  const auto& w = s.omega;
  const auto& d = s.d_omega;
  const double d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  if (norm >= 1.0 - kPureThreshold) return d2;
  const double dot = w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
  return d2 + dot * dot / (1.0 - norm2);
}

namespace detail {

inline void check_closed_form_args(double f, double tau_tilde, double theta) {
  if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("f must be positive and finite");
  if (!(tau_tilde >= 0.0) || !std::isfinite(tau_tilde)) {
    throw DomainError("tau_tilde must be finite and >= 0");
  }
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) throw DomainError("theta must lie in [0, pi]");
}

}  // namespace detail

// Closed-form QFI. Written with expm1 and e^{-x} so that large f tau neither
// overflows nor cancels; cos^2(theta/2) = (1 + cos theta)/2 is exactly zero at pi.
inline double qfi_closed_form(double f, double df_dnu, double tau_tilde, double theta) {
  detail::check_closed_form_args(f, tau_tilde, theta);
  if (tau_tilde == 0.0) return 0.0;
  const double x = f * tau_tilde;
  const double c = std::cos(theta);
  const double cos2_half = 0.5 * (1.0 + c);
  return df_dnu * df_dnu * tau_tilde * tau_tilde * cos2_half * (2.0 - std::exp(-x) * (1.0 - c)) /
         (2.0 * std::expm1(x));
}

// dF/dtheta = -(df)^2 tau^2 (e^{f tau} + cos theta) sin theta / (2 e^{f tau} (e^{f tau} - 1)).
inline double dqfi_dtheta(double f, double df_dnu, double tau_tilde, double theta) {
  detail::check_closed_form_args(f, tau_tilde, theta);
  if (tau_tilde == 0.0) return 0.0;
  const double x = f * tau_tilde;
  const double s = dynamics::InitialState{theta, 0.0}.sin_theta();
  return -df_dnu * df_dnu * tau_tilde * tau_tilde * (1.0 + std::exp(-x) * std::cos(theta)) * s /
         (2.0 * std::expm1(x));
}

// Variance bound 1 / (n F) for n independent measurements.
inline double crlb(double fisher, long long n_measurements = 1) {
  if (n_measurements < 1) throw DomainError("number of measurements must be >= 1");
  if (!(fisher >= 0.0)) throw DomainError("Fisher information must be >= 0");
  if (fisher == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (static_cast<double>(n_measurements) * fisher);
}

inline QfiResult qfi_at(const DetectorConfig& config, response::ResponseCache* cache = nullptr) {
  if (!(config.theta >= 0.0 && config.theta <= std::numbers::pi)) {
    throw DomainError("theta must lie in [0, pi], got " + std::to_string(config.theta));
  }
  QfiResult out;
  out.point = config;
  out.response = response::response_f_combined(config.pol, config.r_tilde,
                                               response::DeficitParam(config.nu),
                                               {.with_derivative = true, .cache = cache});
  out.fisher = qfi_closed_form(out.response.value, out.response.dvalue_dnu, config.tau_tilde,
                               config.theta);
  out.crlb_single = crlb(out.fisher);
  return out;
}

// The same QFI obtained through the Bloch vector and the general qubit formula.
inline double qfi_via_bloch(double f, double df_dnu, double tau_tilde, double theta,
                            double phi = 0.0, double omega_eff = 1.0) {
  const auto init = dynamics::InitialState::make(theta, phi);
  const dynamics::EvolutionParams p{
      .tau_tilde = tau_tilde, .gamma_total = f, .b_over_a = 1.0, .omega_eff = omega_eff};
  return qfi_bloch(dynamics::bloch_evolve_with_dnu(init, p, df_dnu));
}

}  // namespace csqfi::metrology
