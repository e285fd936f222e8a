#pragma once

#include <cmath>

#include "rhobound/core.hpp"

namespace rhobound {

/// F_0(t) = int_0^1 exp(-t u^2) du.
inline double boys_f0(double t) {
  if (t < 1e-3) {
    // 1 - t/3 + t^2/10 - t^3/42 + t^4/216
    return 1.0 + t * (-1.0 / 3.0 + t * (1.0 / 10.0 + t * (-1.0 / 42.0 + t / 216.0)));
  }
  const double s = std::sqrt(t);
  return 0.5 * std::sqrt(kPi) * std::erf(s) / s;
}

/// F_1(t) = int_0^1 u^2 exp(-t u^2) du = -F_0'(t).
inline double boys_f1(double t) {
  if (t < 0.1) {
    // sum_k (-t)^k / (k! (2k+3)); 12 terms reach double precision for t < 0.1
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < 12; ++k) {
      sum += term / (2.0 * k + 3.0);
      term *= -t / (k + 1.0);
    }
    return sum;
  }
  return (boys_f0(t) - std::exp(-t)) / (2.0 * t);
}

}  // namespace rhobound
