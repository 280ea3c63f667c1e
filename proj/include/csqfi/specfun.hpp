#pragma once

// Special functions used by the response-function quadratures: Bessel
// functions of the first kind at real non-negative order and the Gamma
// function. Everything here is a pure function of its arguments.
//
// Accuracy contract for bessel_j: relative error <= 1e-10 for x <= 50 and
// order <= 200, or absolute error <= 1e-12 where |J| < 1e-2. Arguments above
// 50 are accepted but carry no accuracy guarantee (there is no large-argument
// asymptotic branch; the response quadratures never exceed x = 30).

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "csqfi/errors.hpp"

namespace csqfi::specfun {

// Real, finite, non-negative Bessel order.
class BesselOrder {
 public:
  explicit BesselOrder(double a) : a_(a) {
    if (!std::isfinite(a) || a < 0.0) {
      throw DomainError("Bessel order must be finite and non-negative, got " + std::to_string(a));
    }
  }
  double value() const noexcept { return a_; }

 private:
  double a_;
};

namespace detail {

// Lanczos approximation with g = 7 and 9 coefficients (the widely published
// Godfrey set, also used by Numerical Recipes 3rd ed. in a shifted form).
// Relative accuracy is ~1e-15 on the positive real axis.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// Returns the Lanczos series A_g(z) for Gamma(z + 1).
inline double lanczos_sum(double z) {
  double sum = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) {
    sum += kLanczosCoeffs[i] / (z + static_cast<double>(i));
  }
  return sum;
}

inline void check_gamma_arg(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("gamma argument must be finite and positive, got " + std::to_string(x));
  }
}

}  // namespace detail

// Gamma(x) for x > 0.
inline double gamma_fn(double x) {
  detail::check_gamma_arg(x);
  if (x < 0.5) {
    // Reflection keeps the Lanczos series in its accurate region.
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
  }
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  // Split the power so t^(z+1/2) e^-t does not overflow before x ~ 171.
  const double half_power = std::pow(t, 0.5 * (z + 0.5));
  return std::sqrt(2.0 * std::numbers::pi) * half_power * (half_power * std::exp(-t)) *
         detail::lanczos_sum(z);
}

// log Gamma(x) for x > 0, used where Gamma itself would overflow.
inline double log_gamma(double x) {
  detail::check_gamma_arg(x);
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(detail::lanczos_sum(z));
}

// J_a(x) is treated as exactly zero above this order (|J_a(x)| < 1e-15 there).
inline double bessel_tail_cutoff(double x) { return x + 40.0 * (std::cbrt(x) + 1.0); }

namespace detail {

// Everything about the order that does not depend on x. Shared by the scalar
// and batch paths so both produce bit-identical results.
struct OrderSetup {
  double a;           // order
  int n;              // floor(a)
  double mu;          // a - n, in [0, 1)
  double gamma_mu1;   // Gamma(mu + 1), Neumann normalisation
  double gamma_a1;    // Gamma(a + 1) when a + 1 <= 50, else 0
  double lgamma_a1;   // log Gamma(a + 1)
};

inline OrderSetup make_order_setup(BesselOrder order) {
  OrderSetup s{};
  s.a = order.value();
  s.n = static_cast<int>(std::floor(s.a));
  s.mu = s.a - s.n;
  s.gamma_mu1 = gamma_fn(s.mu + 1.0);
  s.gamma_a1 = s.a + 1.0 <= 50.0 ? gamma_fn(s.a + 1.0) : 0.0;
  s.lgamma_a1 = log_gamma(s.a + 1.0);
  return s;
}

inline void check_bessel_arg(double x) {
  if (!std::isfinite(x) || x < 0.0) {
    throw DomainError("Bessel argument must be finite and non-negative, got " + std::to_string(x));
  }
}

// Ascending series: sum_k (-1)^k (x/2)^(2k+a) / (k! Gamma(a+k+1)).
inline double bessel_series(const OrderSetup& s, double x) {
  const double half = 0.5 * x;
  const double prefactor = s.gamma_a1 > 0.0 ? std::pow(half, s.a) / s.gamma_a1
                                            : std::exp(s.a * std::log(half) - s.lgamma_a1);
  if (prefactor == 0.0) return 0.0;
  const double q = -half * half;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (k * (s.a + k));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return prefactor * sum;
}

// Miller backward recurrence over the orders mu + i, normalised with the
// Neumann identity (x/2)^mu = sum_k (mu + 2k) Gamma(mu + k) / k! J_{mu+2k}(x).
inline double bessel_miller(const OrderSetup& s, double x) {
  const int top = static_cast<int>(std::ceil(std::max(s.a, x) + 20.0 + 10.0 * std::cbrt(x))) + 2;
  const int kmax = top / 2;

  // g_k = Gamma(mu + k) / k!, built upwards from g_1 = Gamma(mu + 1).
  double g = s.gamma_mu1;
  for (int k = 1; k < kmax; ++k) g *= (s.mu + k) / (k + 1);

  double upper = 0.0;  // J_{mu+i+1}, unnormalised
  double cur = 1e-300; // J_{mu+i}
  double norm = 0.0;
  double target = 0.0;
  int k = kmax;
  for (int i = top; i >= 0; --i) {
    if (i == s.n) target = cur;
    if (i % 2 == 0) {
      if (i == 0) {
        norm += s.gamma_mu1 * cur;
      } else {
        norm += (s.mu + i) * g * cur;
        // Step g_k down to g_{k-1}.
        if (k > 1) g *= k / (s.mu + k - 1);
        --k;
      }
    }
    if (i == 0) break;
    const double lower = (2.0 * (s.mu + i) / x) * cur - upper;
    upper = cur;
    cur = lower;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      upper *= 1e-250;
      norm *= 1e-250;
      target *= 1e-250;
    }
  }
  return target * std::pow(0.5 * x, s.mu) / norm;
}

inline double bessel_eval(const OrderSetup& s, double x) {
  check_bessel_arg(x);
  if (x == 0.0) return s.a == 0.0 ? 1.0 : 0.0;
  if (s.a > bessel_tail_cutoff(x)) return 0.0;
  if (x <= std::max(4.0, 0.5 * s.a)) return bessel_series(s, x);
  return bessel_miller(s, x);
}

}  // namespace detail

// J_a(x) for real a >= 0 and x >= 0.
inline double bessel_j(BesselOrder order, double x) {
  detail::check_bessel_arg(x);
  return detail::bessel_eval(detail::make_order_setup(order), x);
}

// Element-wise J_a over xs with the order-dependent setup done once.
inline std::vector<double> bessel_j_batch(BesselOrder order, std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  if (xs.empty()) return out;
  const auto setup = detail::make_order_setup(order);
  for (double x : xs) out.push_back(detail::bessel_eval(setup, x));
  return out;
}

}  // namespace csqfi::specfun
