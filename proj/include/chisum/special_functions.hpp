#pragma once

// Special functions at extended precision: modified Bessel I_nu of integer
// order, Kummer's confluent hypergeometric 1F1, the finite exp-polynomial form
// of 1F1 with integer parameters, and the truncated exponential moments used
// to integrate exp-polynomial terms.

#include <vector>

#include "chisum/big_real.hpp"

namespace chisum {

/// A series value with its term count and an absolute bound on the dropped tail.
struct SeriesResult {
  BigReal value;
  long terms_used = 0;
  BigReal truncation_bound;
};

/// Term ceiling for every ascending series below.
inline constexpr long kSeriesTermCeiling = 1'000'000;

/// I_nu(x) for integer nu >= 0 and x >= 0 by the ascending series. All terms are
/// positive so the sum carries no cancellation. Throws NonConvergence past the
/// term ceiling.
SeriesResult bessel_i(unsigned nu, const BigReal& x);

/// Maclaurin coefficients t_0..t_order of I_nu. Only t_j with j >= nu and
/// j = nu (mod 2) are nonzero: t_{nu+2k} = 1 / (2^{nu+2k} k! (k+nu)!).
std::vector<BigReal> bessel_i_taylor_coeffs(unsigned nu, unsigned order,
                                            PrecisionBits bits = default_precision());

/// k-th derivative of I_nu at x >= 0, from I_nu' = (I_{nu-1} + I_{nu+1}) / 2 with
/// I_{-n} = I_n, which expands to 2^{-k} sum_i C(k,i) I_{|nu-k+2i|}(x).
BigReal bessel_i_derivative(unsigned nu, unsigned k, const BigReal& x);

/// 1F1(a; b; z). Negative z goes through Kummer's transform
/// 1F1(a;b;z) = e^z 1F1(b-a;b;-z) so the summed series has no alternation when
/// a, b > 0. b must not be a nonpositive integer.
SeriesResult kummer_1f1(const BigReal& a, const BigReal& b, const BigReal& z);

/// Polynomials P, Q with 1F1(r; s; z) = z^{1-s} (P(z) + e^z Q(z)) for integers
/// 0 < r < s. deg P = s - r - 1, deg Q = r - 1; coefficients are ascending.
struct KummerReduction {
  std::vector<BigReal> p;
  std::vector<BigReal> q;
  long s = 0;

  /// z^{1-s} (P(z) + e^z Q(z)); z must be nonzero.
  BigReal evaluate(const BigReal& z) const;
};

KummerReduction kummer_1f1_integer_reduction(long r, long s, PrecisionBits bits = default_precision());

/// int_0^t x^k e^{b x} dx for b < 0 and t in [0, +inf]. Closed form
/// k!/(-b)^{k+1} P(k+1, -b t) with the regularized lower incomplete gamma P
/// summed as e^{-z} sum_{j>k} z^j/j! (small z) or 1 - e^{-z} sum_{j<=k} z^j/j!.
BigReal lower_incomplete_gamma_poly_exp_integral(unsigned k, const BigReal& b, const BigReal& t);

/// Regularized lower incomplete gamma P(a, z) for a > 0, z >= 0.
BigReal regularized_lower_gamma(const BigReal& a, const BigReal& z);

/// For one rate: P(j+1, z) for j = 0..max_power, computed from the top by the
/// series and then downward with P(j, z) = P(j+1, z) + e^{-z} z^j / j!, which
/// only adds positive terms.
std::vector<BigReal> regularized_lower_gamma_ladder(unsigned max_power, const BigReal& z);

/// Imaginary error function erfi(x) = 2/sqrt(pi) sum x^{2k+1} / (k! (2k+1)).
BigReal erfi(const BigReal& x);

/// Binomial coefficient as a BigReal.
BigReal binomial(unsigned long n, unsigned long k, PrecisionBits bits = default_precision());

}  // namespace chisum
