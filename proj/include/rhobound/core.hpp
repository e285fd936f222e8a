#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace rhobound {

using Vec3 = Eigen::Vector3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad region, bad index list, N < 2 ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested accuracy could not be reached or a matrix was numerically singular.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

class QuadratureCapExceeded : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

class SingularGram : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Shortest-style rendering for messages and report context strings.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace rhobound
