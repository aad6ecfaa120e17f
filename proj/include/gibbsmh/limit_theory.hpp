#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gibbsmh {

//! Standard normal CDF via erfc, accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

//! Limiting mean acceptance c(tau) = 2 Phi(-tau s / 2).
inline double c_theoretical(double tau, double s) {
  if (!(s > 0)) throw std::invalid_argument("c_theoretical: s must be > 0");
  if (tau < 0) throw std::invalid_argument("c_theoretical: tau must be >= 0");
  return 2.0 * normal_cdf(-0.5 * tau * s);
}

//! Speed of the limiting diffusion, tau^2 c(tau).
inline double efficiency_theoretical(double tau, double s) { return tau * tau * c_theoretical(tau, s); }

//! argmax of tau^2 c(tau, s) by golden-section search on [0, 20 / s].
inline double tau_star(double s, double tol = 1e-9) {
  if (!(s > 0)) throw std::invalid_argument("tau_star: s must be > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 20.0 / s;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = efficiency_theoretical(c, s), fd = efficiency_theoretical(d, s);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = efficiency_theoretical(c, s);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = efficiency_theoretical(d, s);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace gibbsmh
