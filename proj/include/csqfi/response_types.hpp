#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "csqfi/errors.hpp"

namespace csqfi::response {

// Version tag of the numerical scheme behind response values. Cache rows
// carrying a different tag are ignored.
inline constexpr std::string_view kSchemeVersion = "csqfi-response-v1";

// Validated input range of the response quadratures.
inline constexpr double kMaxRTilde = 30.0;
inline constexpr double kMinNu = 1.0;
inline constexpr double kMaxNu = 3.0;

// Dipole orientation relative to the string.
enum class Component { radial, tangential, parallel };

inline constexpr Component kAllComponents[] = {Component::radial, Component::tangential,
                                              Component::parallel};

inline std::string_view component_name(Component c) {
  switch (c) {
    case Component::radial: return "radial";
    case Component::tangential: return "tangential";
    case Component::parallel: return "parallel";
  }
  return "?";
}

inline std::optional<Component> parse_component(std::string_view s) {
  if (s == "r" || s == "radial") return Component::radial;
  if (s == "a" || s == "alpha" || s == "t" || s == "tangential") return Component::tangential;
  if (s == "z" || s == "parallel") return Component::parallel;
  return std::nullopt;
}

// Deficit-angle parameter nu = 1 / (1 - 4 G mu); nu = 1 is flat space.
class DeficitParam {
 public:
  explicit DeficitParam(double nu) : nu_(nu) {
    if (!std::isfinite(nu) || nu < 1.0) {
      throw DomainError("deficit parameter nu must be finite and >= 1, got " + std::to_string(nu));
    }
  }
  double value() const noexcept { return nu_; }

 private:
  double nu_;
};

inline DeficitParam deficit_from_mass_density(double g_mu) {
  if (!(g_mu >= 0.0 && g_mu < 0.25)) {
    throw DomainError("G*mu must lie in [0, 1/4), got " + std::to_string(g_mu));
  }
  return DeficitParam(1.0 / (1.0 - 4.0 * g_mu));
}

// Relative polarizability weights (zeta_r, zeta_alpha, zeta_z), summing to one.
struct Polarization {
  double zeta_r = 1.0;
  double zeta_alpha = 0.0;
  double zeta_z = 0.0;

  static Polarization make(double zr, double za, double zz) {
    for (double z : {zr, za, zz}) {
      if (!(z >= 0.0 && z <= 1.0)) throw DomainError("polarization weights must lie in [0, 1]");
    }
    if (std::abs(zr + za + zz - 1.0) > 1e-12) {
      throw DomainError("polarization weights must sum to 1");
    }
    return Polarization{zr, za, zz};
  }
  static Polarization pure(Component c) {
    switch (c) {
      case Component::radial: return {1.0, 0.0, 0.0};
      case Component::tangential: return {0.0, 1.0, 0.0};
      case Component::parallel: return {0.0, 0.0, 1.0};
    }
    return {};
  }

  double weight(Component c) const {
    switch (c) {
      case Component::radial: return zeta_r;
      case Component::tangential: return zeta_alpha;
      case Component::parallel: return zeta_z;
    }
    return 0.0;
  }

  // The pure component this polarization selects, if it is one of the presets.
  std::optional<Component> pure_component() const {
    for (Component c : kAllComponents) {
      if (weight(c) == 1.0) return c;
    }
    return std::nullopt;
  }

  bool operator==(const Polarization&) const = default;
};

// A response function value with its nu-derivative and error estimates.
// dvalue_dnu and deriv_error are meaningful only when has_derivative is set.
struct ResponseValue {
  double value = 0.0;
  double dvalue_dnu = 0.0;
  double trunc_error = 0.0;
  double quad_error = 0.0;
  double deriv_error = 0.0;
  bool has_derivative = false;
  int nodes = 0;  // Gauss-Legendre nodes of the accepted rule
  int modes = 0;  // mode-sum cutoff M (|m| <= M)
};

// Dissipator parameters A and B in units of gamma0.
struct KossakowskiCoeffs {
  double a_coeff = 0.0;
  double b_coeff = 0.0;
};

struct ThermalParams {
  double omega0 = 0.0;       // rad/s
  double temperature = 0.0;  // K
};

}  // namespace csqfi::response
