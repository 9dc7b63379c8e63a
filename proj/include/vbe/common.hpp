#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vbe {

/// Global comparison tolerance for real-valued token and utility arithmetic.
inline constexpr double kTolerance = 1e-9;

/// Malformed or inconsistent input (bad parameters, unparsable files).
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline double scale_of(double a, double b)
{
  return std::max({1.0, std::fabs(a), std::fabs(b)});
}
}  // namespace detail

inline bool approx_eq(double a, double b, double tol = kTolerance)
{
  return std::fabs(a - b) <= tol * detail::scale_of(a, b);
}

inline bool approx_ge(double a, double b, double tol = kTolerance)
{
  return a >= b - tol * detail::scale_of(a, b);
}

inline bool approx_le(double a, double b, double tol = kTolerance)
{
  return approx_ge(b, a, tol);
}

/// Strictly greater by more than the tolerance.
inline bool definitely_gt(double a, double b, double tol = kTolerance)
{
  return !approx_le(a, b, tol);
}

inline bool definitely_lt(double a, double b, double tol = kTolerance)
{
  return definitely_gt(b, a, tol);
}

}  // namespace vbe
