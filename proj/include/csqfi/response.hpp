#pragma once

// Polarization-resolved response functions of a static two-level detector
// near a cosmic string, as functions of the rescaled distance r~ = omega0 r
// and the deficit parameter nu:
//
//   f_r = (3nu/4) sum_m int_0^1 deta eta/sqrt(1-eta^2)
//           [ (2-eta^2) J^2_{|nu m+1|}(r~ eta) + eta^2 J_{|nu m|-1} J_{|nu m|+1} ]
//   f_a = same with the cross term subtracted
//   f_z = (3nu/2) sum_m int_0^1 deta eta^3/sqrt(1-eta^2) J^2_{|nu m|}(r~ eta)
//
// Each f_i equals 1 in flat space (nu = 1). The substitution eta = sin(phi)
// removes the endpoint singularity and the phi integral is done with
// Gauss-Legendre rules of 16, 32, 64 and 128 nodes until successive rules
// agree. The mode sum runs over |m| <= M = ceil((r~ + 10 r~^(1/3) + 25) / nu).
//
// For nu >= 1 and m < 0 the squared-term order |nu m + 1| equals nu|m| - 1,
// so the two modes +-k share the orders nu k - 1, nu k, nu k + 1 and are
// summed together. The m = 0 cross term uses J_{-1} = -J_1.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "csqfi/errors.hpp"
#include "csqfi/quadrature.hpp"
#include "csqfi/response_cache.hpp"
#include "csqfi/response_types.hpp"
#include "csqfi/specfun.hpp"

namespace csqfi::response {

// Finite-difference step in nu for the derivative (one Richardson level on top).
inline constexpr double kDerivativeStep = 1e-3;
// Relative budget for trunc_error + quad_error.
inline constexpr double kErrorBudget = 1e-8;

inline constexpr int kMinNodes = 16;
inline constexpr int kMaxNodes = 128;

struct ResponseOptions {
  bool with_derivative = false;
  ResponseCache* cache = nullptr;
};

namespace detail {

inline void check_inputs(double r_tilde, double nu) {
  if (!std::isfinite(r_tilde) || r_tilde <= 0.0 || r_tilde > kMaxRTilde) {
    throw DomainError("r_tilde must lie in (0, 30], got " + std::to_string(r_tilde));
  }
  if (nu < kMinNu || nu > kMaxNu) {
    throw DomainError("nu must lie in [1, 3], got " + std::to_string(nu));
  }
}

inline int mode_cutoff(double r_tilde, double nu) {
  return static_cast<int>(std::ceil((r_tilde + 10.0 * std::cbrt(r_tilde) + 25.0) / nu));
}

struct FixedRuleValue {
  double value = 0.0;
  double last_band = 0.0;  // contribution of the |m| = M modes
};

// One Gauss-Legendre evaluation of f_c with a fixed node count and mode cutoff.
inline FixedRuleValue evaluate_fixed(Component c, double r_tilde, double nu, int nodes,
                                     int modes) {
  using specfun::BesselOrder;
  using specfun::bessel_j_batch;

  const auto rule = quadrature::map_rule(quadrature::gauss_legendre(nodes), 0.0,
                                         0.5 * std::numbers::pi);
  const std::size_t n = rule.nodes.size();
  std::vector<double> eta(n), xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    eta[i] = std::sin(rule.nodes[i]);
    xs[i] = r_tilde * eta[i];
  }

  // Per-node mode sums: squared terms, cross terms, and the parallel sum.
  std::vector<double> sq(n, 0.0), cross(n, 0.0), par(n, 0.0);
  std::vector<double> sq_last(n, 0.0), cross_last(n, 0.0), par_last(n, 0.0);

  const bool in_plane = c != Component::parallel;
  if (in_plane) {
    const auto j1 = bessel_j_batch(BesselOrder(1.0), xs);
    for (std::size_t i = 0; i < n; ++i) {
      sq[i] += j1[i] * j1[i];
      cross[i] -= j1[i] * j1[i];
    }
  } else {
    const auto j0 = bessel_j_batch(BesselOrder(0.0), xs);
    for (std::size_t i = 0; i < n; ++i) par[i] += j0[i] * j0[i];
  }

  for (int k = 1; k <= modes; ++k) {
    const double a = nu * k;
    const bool last = k == modes;
    if (in_plane) {
      const auto lo = bessel_j_batch(BesselOrder(a - 1.0), xs);
      const auto hi = bessel_j_batch(BesselOrder(a + 1.0), xs);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = lo[i] * lo[i] + hi[i] * hi[i];
        const double x = 2.0 * lo[i] * hi[i];
        sq[i] += s;
        cross[i] += x;
        if (last) {
          sq_last[i] = s;
          cross_last[i] = x;
        }
      }
    } else {
      const auto ja = bessel_j_batch(BesselOrder(a), xs);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = 2.0 * ja[i] * ja[i];
        par[i] += s;
        if (last) par_last[i] = s;
      }
    }
  }

  const double sign = c == Component::radial ? 1.0 : -1.0;
  auto integrand = [&](std::size_t i, const std::vector<double>& s, const std::vector<double>& x,
                       const std::vector<double>& p) {
    const double e = eta[i];
    const double e2 = e * e;
    if (in_plane) return 0.75 * nu * e * ((2.0 - e2) * s[i] + sign * e2 * x[i]);
    return 1.5 * nu * e * e2 * p[i];
  };

  FixedRuleValue out;
  for (std::size_t i = 0; i < n; ++i) {
    out.value += rule.weights[i] * integrand(i, sq, cross, par);
    out.last_band += rule.weights[i] * integrand(i, sq_last, cross_last, par_last);
  }
  out.last_band = std::abs(out.last_band);
  return out;
}

// Node-doubling refinement until the error budget is met.
inline ResponseValue evaluate_adaptive(Component c, double r_tilde, double nu) {
  const int modes = mode_cutoff(r_tilde, nu);
  ResponseValue rv;
  rv.modes = modes;
  FixedRuleValue prev = evaluate_fixed(c, r_tilde, nu, kMinNodes, modes);
  for (int nodes = 2 * kMinNodes; nodes <= kMaxNodes; nodes *= 2) {
    const FixedRuleValue cur = evaluate_fixed(c, r_tilde, nu, nodes, modes);
    rv.value = cur.value;
    rv.trunc_error = cur.last_band;
    rv.quad_error = std::abs(cur.value - prev.value);
    rv.nodes = nodes;
    if (rv.trunc_error + rv.quad_error <= kErrorBudget * std::max(1.0, std::abs(rv.value))) {
      return rv;
    }
    prev = cur;
  }
  throw ConvergenceError("response quadrature did not meet its error budget", rv.value,
                         rv.trunc_error + rv.quad_error);
}

// d f / d nu by differences at the accepted node count and mode cutoff, with
// one Richardson level (steps h and h/2). Central differences in the
// interior, second-order one-sided stencils within h of either range end.
inline void add_derivative(Component c, double r_tilde, double nu, ResponseValue& rv) {
  const double h = kDerivativeStep;
  auto f = [&](double v) { return evaluate_fixed(c, r_tilde, v, rv.nodes, rv.modes).value; };

  double d_h = 0.0;
  double d_h2 = 0.0;
  if (nu - h >= kMinNu && nu + h <= kMaxNu) {
    d_h = (f(nu + h) - f(nu - h)) / (2.0 * h);
    d_h2 = (f(nu + 0.5 * h) - f(nu - 0.5 * h)) / h;
  } else {
    const double dir = nu - h < kMinNu ? 1.0 : -1.0;
    const double f0 = rv.value;
    const double f_half = f(nu + dir * 0.5 * h);
    const double f_one = f(nu + dir * h);
    const double f_two = f(nu + dir * 2.0 * h);
    d_h = dir * (-3.0 * f0 + 4.0 * f_one - f_two) / (2.0 * h);
    d_h2 = dir * (-3.0 * f0 + 4.0 * f_half - f_one) / h;
  }
  rv.dvalue_dnu = (4.0 * d_h2 - d_h) / 3.0;
  rv.deriv_error = std::abs(d_h2 - d_h) / 3.0;
  rv.has_derivative = true;
}

}  // namespace detail

// f_c(r~, nu) for a single polarization component.
inline ResponseValue response_f(Component c, double r_tilde, DeficitParam nu,
                                const ResponseOptions& options = {}) {
  const double v = nu.value();
  detail::check_inputs(r_tilde, v);
  const ResponseCache::Key key(c, r_tilde, v);
  if (options.cache) {
    if (auto hit = options.cache->lookup(key); hit && (hit->has_derivative || !options.with_derivative)) {
      return *hit;
    }
  }
  ResponseValue rv = detail::evaluate_adaptive(c, r_tilde, v);
  if (options.with_derivative) detail::add_derivative(c, r_tilde, v, rv);
  if (options.cache) options.cache->store(key, rv);
  return rv;
}

// f = sum_i zeta_i f_i. Components with zero weight are not evaluated.
inline ResponseValue response_f_combined(const Polarization& pol, double r_tilde, DeficitParam nu,
                                         const ResponseOptions& options = {}) {
  detail::check_inputs(r_tilde, nu.value());
  ResponseValue out;
  out.has_derivative = options.with_derivative;
  for (Component c : kAllComponents) {
    const double w = pol.weight(c);
    if (w == 0.0) continue;
    const ResponseValue rv = response_f(c, r_tilde, nu, options);
    out.value += w * rv.value;
    out.dvalue_dnu += w * rv.dvalue_dnu;
    out.trunc_error += w * rv.trunc_error;
    out.quad_error += w * rv.quad_error;
    out.deriv_error += w * rv.deriv_error;
    out.nodes = std::max(out.nodes, rv.nodes);
    out.modes = std::max(out.modes, rv.modes);
  }
  return out;
}

// Leading small-distance behaviour: f_r ~ f_a ~ 3 nu^2 (nu+1) / Gamma(2nu+2) r~^(2(nu-1)),
// f_z ~ nu. Only the m = -1 mode is kept for the in-plane components, so the
// in-plane formula is the true limit only for 1 <= nu < 2; at nu >= 2 the
// m = 0 mode is of the same or lower order in r~.
inline double response_asymptotic_small_r(Component c, double r_tilde, DeficitParam nu) {
  if (!std::isfinite(r_tilde) || r_tilde <= 0.0) {
    throw DomainError("r_tilde must be positive, got " + std::to_string(r_tilde));
  }
  const double v = nu.value();
  if (c == Component::parallel) return v;
  return 3.0 * v * v * (v + 1.0) / specfun::gamma_fn(2.0 * v + 2.0) *
         std::pow(r_tilde, 2.0 * (v - 1.0));
}

inline double derivative_dnu(Component c, double r_tilde, DeficitParam nu,
                             ResponseCache* cache = nullptr) {
  return response_f(c, r_tilde, nu, {.with_derivative = true, .cache = cache}).dvalue_dnu;
}

namespace detail {

// f / 4 rounded to 51 significant bits, so (2N + 1) B is exact for small
// integer N and A / B reproduces 2N + 1 exactly. The rounding is ~4e-16
// relative, far below the quadrature budget.
inline double quarter_rate(double f) {
  int e = 0;
  const double m = std::frexp(f, &e);
  return std::ldexp(std::nearbyint(std::ldexp(m, 51)), e - 2 - 51);
}

}  // namespace detail

// Vacuum coefficients: A = B = f / 4 in units of gamma0.
inline KossakowskiCoeffs kossakowski_vacuum(const Polarization& pol, double r_tilde,
                                            DeficitParam nu, ResponseCache* cache = nullptr) {
  const double b = detail::quarter_rate(response_f_combined(pol, r_tilde, nu, {.cache = cache}).value);
  return {b, b};
}

// Physical constants in SI units, at the precision quoted for the thermal estimate.
inline constexpr double kHbar = 1.0546e-34;
inline constexpr double kBoltzmann = 1.38e-23;

// Bose-Einstein occupation N = 1 / (exp(hbar omega0 / kB T) - 1).
inline double thermal_occupation(const ThermalParams& p) {
  if (!std::isfinite(p.omega0) || p.omega0 <= 0.0) {
    throw DomainError("omega0 must be positive, got " + std::to_string(p.omega0));
  }
  if (!std::isfinite(p.temperature) || p.temperature < 0.0) {
    throw DomainError("temperature must be non-negative, got " + std::to_string(p.temperature));
  }
  if (p.temperature == 0.0) return 0.0;
  const double x = kHbar * p.omega0 / (kBoltzmann * p.temperature);
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

inline KossakowskiCoeffs kossakowski_thermal_from_f(double f, double n_occ) {
  if (!std::isfinite(n_occ) || n_occ < 0.0) {
    throw DomainError("thermal occupation must be non-negative, got " + std::to_string(n_occ));
  }
  const double b = detail::quarter_rate(f);
  return {b * (2.0 * n_occ + 1.0), b};
}

// Thermal coefficients: A = (f/4)(2N + 1), B = f/4.
inline KossakowskiCoeffs kossakowski_thermal(const Polarization& pol, double r_tilde,
                                             DeficitParam nu, double n_occ,
                                             ResponseCache* cache = nullptr) {
  if (!std::isfinite(n_occ) || n_occ < 0.0) {
    throw DomainError("thermal occupation must be non-negative, got " + std::to_string(n_occ));
  }
  const double f = response_f_combined(pol, r_tilde, nu, {.cache = cache}).value;
  return kossakowski_thermal_from_f(f, n_occ);
}

}  // namespace csqfi::response
