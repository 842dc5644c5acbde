#pragma once

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "dtrack/errors.hpp"

namespace dtrack::detail {

/// Bracketed root of f on [lo, hi] (f(lo), f(hi) of opposite sign or zero),
/// returned once the bracket is narrower than abs_tol.
template <class F>
double bracket_root(F&& f, double lo, double hi, double flo, double fhi, double abs_tol,
                    const char* what) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw ConvergenceError(std::string(what) + ": root not bracketed");
  }
  std::uintmax_t iters = 200;
  auto tol = [abs_tol](double a, double b) { return std::abs(a - b) <= abs_tol; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  if (iters >= 200 && !tol(r.first, r.second)) {
    throw ConvergenceError(std::string(what) + ": iteration limit reached");
  }
  return 0.5 * (r.first + r.second);
}

template <class F>
double bracket_root(F&& f, double lo, double hi, double abs_tol, const char* what) {
  return bracket_root(f, lo, hi, f(lo), f(hi), abs_tol, what);
}

/// exp(x) guarded against overflow into inf.
inline double safe_exp(double x) {
  if (x > 700.0) throw NumericalBlowup("exponent " + std::to_string(x) + " overflows");
  return std::exp(x);
}

}  // namespace dtrack::detail
