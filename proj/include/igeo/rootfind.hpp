#pragma once

#include <cmath>
#include <functional>

#include "igeo/errors.hpp"

namespace igeo {

/*
 * Safeguarded 1-D root finding on a bracket [a, b] with f(a) and f(b) of
 * opposite sign: bisection refined by secant steps, accepting the secant
 * candidate only while it stays inside the bracket.  Stops when the bracket
 * width drops below tol (or an iterate hits an exact zero).
 */
inline double find_root(const std::function<double(double)>& f, double a, double b,
                        double fa, double fb, double tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw TraversalError("root finder needs a sign change on the bracket");
  for (int it = 0; it < 200; ++it) {
    if (std::abs(b - a) < tol) break;
    double mid = 0.5 * (a + b);
    double cand = mid;
    const double denom = fb - fa;
    if (denom != 0.0) {
      const double secant = (a * fb - b * fa) / denom;
      if (secant > std::min(a, b) && secant < std::max(a, b)) cand = secant;
    }
    if (cand == a || cand == b) cand = mid;   // no progress; force bisection
    const double fc = f(cand);
    if (fc == 0.0) return cand;
    if ((fc > 0.0) == (fa > 0.0)) {
      a = cand;
      fa = fc;
    } else {
      b = cand;
      fb = fc;
    }
  }
  /* Final secant interpolation inside the terminal bracket. */
  const double denom = fb - fa;
  if (denom != 0.0) {
    const double secant = (a * fb - b * fa) / denom;
    if (secant >= std::min(a, b) && secant <= std::max(a, b)) return secant;
  }
  return 0.5 * (a + b);
}

inline double find_root(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  return find_root(f, a, b, f(a), f(b), tol);
}

}  // namespace igeo
