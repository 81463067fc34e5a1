#pragma once

// Gauss-Legendre quadrature for BigReal and long double, fixed-order and
// adaptive (panel bisection until a panel agrees with its two halves).

#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

#include "chisum/big_real.hpp"
#include "chisum/errors.hpp"

namespace chisum {

template <class Real>
struct GaussLegendreRule {
  std::vector<Real> nodes;    // on [-1, 1], ascending
  std::vector<Real> weights;
};

/// Cached n-point rule at the given precision.
const GaussLegendreRule<BigReal>& gauss_legendre_rule(int n, PrecisionBits bits);
const GaussLegendreRule<long double>& gauss_legendre_rule_ld(int n);

template <class Real>
struct QuadResult {
  Real value;
  Real error;  // estimated absolute error
  int panels = 0;
};

namespace detail {

inline long double quad_abs(long double x) { return std::fabs(x); }
inline BigReal quad_abs(const BigReal& x) { return abs(x); }

template <class Real>
const GaussLegendreRule<Real>& rule_for(int n, const Real& proto) {
  if constexpr (std::is_same_v<Real, BigReal>) {
    return gauss_legendre_rule(n, proto.precision());
  } else {
    (void)proto;
    return gauss_legendre_rule_ld(n);
  }
}

}  // namespace detail

/// Fixed-order Gauss-Legendre on [a, b].
template <class Real, class F>
Real gauss_legendre(F&& f, const Real& a, const Real& b, int n) {
  const auto& rule = detail::rule_for<Real>(n, a);
  const Real half = (b - a) * 0.5;
  const Real mid = (a + b) * 0.5;
  Real sum = a * 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

/// Adaptive Gauss-Legendre: a panel is accepted when its n-point value and the
/// sum over its two halves differ by less than the panel's share of abs_tol.
template <class Real, class F>
QuadResult<Real> integrate_adaptive(F&& f, const Real& a, const Real& b, const Real& abs_tol, int n = 20,
                                    int max_panels = 1 << 14) {
  struct Panel {
    Real lo, hi, value;
  };
  const Real width = b - a;
  std::vector<Panel> stack;
  stack.push_back({a, b, gauss_legendre<Real>(f, a, b, n)});
  Real total = a * 0.0;
  Real err = a * 0.0;
  int panels = 0;
  while (!stack.empty()) {
    Panel p = std::move(stack.back());
    stack.pop_back();
    const Real mid = (p.lo + p.hi) * 0.5;
    Real left = gauss_legendre<Real>(f, p.lo, mid, n);
    Real right = gauss_legendre<Real>(f, mid, p.hi, n);
    const Real diff = detail::quad_abs(left + right - p.value);
    const Real share = abs_tol * ((p.hi - p.lo) / width);
    if (diff <= share || ++panels > max_panels) {
      if (panels > max_panels) throw QuadratureFailure("adaptive quadrature exceeded its panel budget");
      total += left + right;
      err += diff;
    } else {
      stack.push_back({mid, p.hi, std::move(right)});
      stack.push_back({p.lo, mid, std::move(left)});
    }
  }
  return {total, err, panels};
}

}  // namespace chisum
