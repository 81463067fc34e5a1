#include "chisum/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chisum/errors.hpp"

namespace chisum {

namespace {

constexpr PrecisionBits kGuardBits = 24;

// Accepts the partial sum once the tail bound is this far below it.
BigReal tail_target(const BigReal& sum, PrecisionBits bits) { return ldexp(abs(sum), -(bits + 4)); }

[[noreturn]] void throw_ceiling(const char* what) {
  throw NonConvergence(std::string(what) + ": series exceeded " + std::to_string(kSeriesTermCeiling) + " terms");
}

// P(k+1, z) with z >= 0 by the upper series e^{-z} sum_{j>k} z^j / j!.
BigReal lower_gamma_upper_series(unsigned k, const BigReal& z, PrecisionBits work) {
  // First term e^{-z} z^{k+1} / (k+1)!.
  BigReal term = exp(-BigReal(z, work));
  for (unsigned j = 1; j <= k + 1; ++j) {
    term *= z;
    term /= static_cast<long>(j);
  }
  BigReal sum = term;
  for (long j = k + 2;; ++j) {
    if (j - static_cast<long>(k) > kSeriesTermCeiling) throw_ceiling("incomplete gamma");
    term *= z;
    term /= j;
    sum += term;
    // Ratios z/(i+1) for i >= j are below rho.
    BigReal rho = z / (j + 1);
    if (rho < 1.0) {
      BigReal tail = term * rho / (1 - rho);
      if (tail <= tail_target(sum, work)) break;
    }
    if (term.is_zero()) break;
  }
  return sum;
}

// Q(k+1, z) = e^{-z} sum_{j<=k} z^j / j!.
BigReal upper_gamma_finite(unsigned k, const BigReal& z, PrecisionBits work) {
  BigReal term = exp(-BigReal(z, work));
  BigReal sum = term;
  for (unsigned j = 1; j <= k; ++j) {
    term *= z;
    term /= static_cast<long>(j);
    sum += term;
  }
  return sum;
}

// Pochhammer (x)_n for integer x.
BigReal pochhammer_int(long x, long n, PrecisionBits bits) {
  BigReal r(1, bits);
  for (long i = 0; i < n; ++i) r *= (x + i);
  return r;
}

}  // namespace

SeriesResult bessel_i(unsigned nu, const BigReal& x) {
  if (x < 0.0) throw DomainError("bessel_i requires x >= 0");
  const PrecisionBits bits = x.precision();
  const PrecisionBits work = bits + kGuardBits;
  if (x.is_zero()) {
    return {BigReal(nu == 0 ? 1 : 0, bits), 1, BigReal::zero(bits)};
  }
  const BigReal half = ldexp(BigReal(x, work), -1);
  const BigReal q = half * half;
  BigReal term = pow(half, static_cast<long>(nu)) / factorial(nu, work);
  BigReal sum = term;
  long k = 0;
  BigReal bound;
  for (;;) {
    if (k >= kSeriesTermCeiling) throw_ceiling("bessel_i");
    // t_{k+1} = t_k q / ((k+1)(k+1+nu))
    term *= q;
    term /= (k + 1) * (k + 1 + static_cast<long>(nu));
    ++k;
    sum += term;
    BigReal rho = q / ((k + 1) * (k + 1 + static_cast<long>(nu)));
    if (rho < 1.0) {
      bound = term * rho / (1 - rho);
      if (bound <= tail_target(sum, bits)) break;
    }
  }
  return {BigReal(sum, bits), k + 1, BigReal(bound, bits)};
}

std::vector<BigReal> bessel_i_taylor_coeffs(unsigned nu, unsigned order, PrecisionBits bits) {
  std::vector<BigReal> out(order + 1, BigReal::zero(bits));
  for (unsigned j = nu; j <= order; j += 2) {
    const unsigned k = (j - nu) / 2;
    out[j] = ldexp(BigReal(1, bits), -static_cast<long>(j)) / (factorial(k, bits) * factorial(k + nu, bits));
  }
  return out;
}

BigReal bessel_i_derivative(unsigned nu, unsigned k, const BigReal& x) {
  if (x < 0.0) throw DomainError("bessel_i_derivative requires x >= 0");
  const PrecisionBits bits = x.precision();
  BigReal sum = BigReal::zero(bits + kGuardBits);
  for (unsigned i = 0; i <= k; ++i) {
    const long order = std::labs(static_cast<long>(nu) - static_cast<long>(k) + 2 * static_cast<long>(i));
    sum += binomial(k, i, bits + kGuardBits) * bessel_i(static_cast<unsigned>(order), x).value;
  }
  return BigReal(ldexp(std::move(sum), -static_cast<long>(k)), bits);
}

SeriesResult kummer_1f1(const BigReal& a, const BigReal& b, const BigReal& z) {
  const PrecisionBits bits = std::max({a.precision(), b.precision(), z.precision()});
  {
    // b must not be a nonpositive integer.
    BigReal bi = BigReal::zero(bits);
    mpfr_round(bi.raw(), b.raw());
    if (bi == b && b <= 0.0) throw DomainError("kummer_1f1: b is a nonpositive integer");
  }
  if (z.sign() < 0) {
    SeriesResult inner = kummer_1f1(b - a, b, -z);
    const BigReal scale = exp(BigReal(z, bits + kGuardBits));
    return {BigReal(inner.value * scale, bits), inner.terms_used, BigReal(inner.truncation_bound * scale, bits)};
  }
  if (z.is_zero()) return {BigReal(1, bits), 1, BigReal::zero(bits)};

  PrecisionBits guard = kGuardBits;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const PrecisionBits work = bits + guard;
    const BigReal aw(a, work), bw(b, work), zw(z, work);
    const BigReal abs_a = abs(aw), abs_b = abs(bw);
    BigReal term(1, work);
    BigReal sum(1, work);
    BigReal max_term(1, work);
    BigReal bound = BigReal::zero(work);
    long k = 0;
    for (;;) {
      if (k >= kSeriesTermCeiling) throw_ceiling("kummer_1f1");
      BigReal ak = aw + k;
      if (ak.is_zero()) {
        bound = BigReal::zero(work);
        break;  // a is a nonpositive integer: the series terminates.
      }
      term *= ak;
      term *= zw;
      term /= (bw + k);
      term /= k + 1;
      ++k;
      sum += term;
      if (abs(term) > max_term) max_term = abs(term);
      // For j >= k+1 > |b|: |t_{j+1}/t_j| <= (|a|+j)/(j-|b|) * z/(j+1), which
      // decreases in j, so the tail is geometric from t_{k+1} on.
      if (abs_b < static_cast<double>(k + 1)) {
        BigReal rho = (abs_a + (k + 1)) / ((k + 1) - abs_b) * zw / (k + 2);
        if (rho < 1.0) {
          BigReal next = abs(term * (aw + k) * zw / ((bw + k) * (k + 1)));
          bound = next / (1 - rho);
          if (bound <= tail_target(sum, bits)) break;
        }
      }
    }
    // Cancellation check: bits lost between the largest term and the sum.
    const long lost = sum.is_zero() ? guard + 64 : max_term.exponent2() - sum.exponent2();
    if (lost < guard - 8) return {BigReal(sum, bits), k + 1, BigReal(bound, bits)};
    guard = lost + 64;
  }
  throw NonConvergence("kummer_1f1: cancellation could not be resolved");
}

BigReal KummerReduction::evaluate(const BigReal& z) const {
  if (z.is_zero()) throw DomainError("KummerReduction::evaluate needs z != 0");
  // P(z) + e^z Q(z) cancels down to O(z^{s-1}) near zero.
  const long small = std::max(0L, -z.exponent2());
  const PrecisionBits work = z.precision() + kGuardBits + (s - 1) * small;
  const BigReal zw(z, work);
  BigReal ps = BigReal::zero(work), qs = BigReal::zero(work);
  for (auto it = p.rbegin(); it != p.rend(); ++it) ps = ps * zw + *it;
  for (auto it = q.rbegin(); it != q.rend(); ++it) qs = qs * zw + *it;
  BigReal r = (ps + exp(zw) * qs) * pow(zw, 1 - s);
  return BigReal(r, z.precision());
}

KummerReduction kummer_1f1_integer_reduction(long r, long s, PrecisionBits bits) {
  if (r <= 0 || r >= s) throw DomainError("kummer_1f1_integer_reduction requires 0 < r < s");
  const PrecisionBits work = bits + kGuardBits;
  // K = (s-2)! (1-s)_r / (r-1)!
  const BigReal K = factorial(static_cast<unsigned long>(s - 2), work) * pochhammer_int(1 - s, r, work) /
                    factorial(static_cast<unsigned long>(r - 1), work);
  KummerReduction out;
  out.s = s;
  for (long k = 0; k <= s - r - 1; ++k) {
    BigReal c = K * pochhammer_int(r + 1 - s, k, work) /
                (factorial(static_cast<unsigned long>(k), work) * pochhammer_int(2 - s, k, work));
    out.p.emplace_back(c, bits);
  }
  for (long k = 0; k <= r - 1; ++k) {
    BigReal c = K * pochhammer_int(1 - r, k, work) /
                (factorial(static_cast<unsigned long>(k), work) * pochhammer_int(2 - s, k, work));
    // -K (-1)^k (1-r)_k / (k! (2-s)_k)
    if (k % 2 == 0) c = -c;
    out.q.emplace_back(c, bits);
  }
  return out;
}

BigReal lower_incomplete_gamma_poly_exp_integral(unsigned k, const BigReal& b, const BigReal& t) {
  if (!(b < 0.0)) throw DomainError("poly-exp integral requires a negative rate");
  if (t < 0.0) throw DomainError("poly-exp integral requires t >= 0");
  const PrecisionBits bits = std::max(b.precision(), t.precision());
  const PrecisionBits work = bits + kGuardBits;
  const BigReal nb = -BigReal(b, work);
  const BigReal full = factorial(k, work) / pow(nb, static_cast<long>(k) + 1);
  if (t.is_inf()) return BigReal(full, bits);
  if (t.is_zero()) return BigReal::zero(bits);
  const BigReal z = nb * t;
  BigReal p = z <= static_cast<double>(k + 1) ? lower_gamma_upper_series(k, z, work)
                                               : 1 - upper_gamma_finite(k, z, work);
  return BigReal(full * p, bits);
}

BigReal regularized_lower_gamma(const BigReal& a, const BigReal& z) {
  if (!(a > 0.0)) throw DomainError("regularized_lower_gamma requires a > 0");
  if (z < 0.0) throw DomainError("regularized_lower_gamma requires z >= 0");
  const PrecisionBits bits = std::max(a.precision(), z.precision());
  if (z.is_zero()) return BigReal::zero(bits);
  if (z.is_inf()) return BigReal(1, bits);
  const PrecisionBits work = bits + kGuardBits;
  const BigReal aw(a, work), zw(z, work);
  // z^a e^{-z} / Gamma(a+1) * sum_n z^n / ((a+1)...(a+n))
  BigReal term(1, work), sum(1, work);
  for (long n = 1;; ++n) {
    if (n > kSeriesTermCeiling) throw_ceiling("regularized_lower_gamma");
    term *= zw;
    term /= aw + n;
    sum += term;
    BigReal rho = zw / (aw + (n + 1));
    if (rho < 1.0) {
      BigReal tail = term * rho / (1 - rho);
      if (tail <= tail_target(sum, work)) break;
    }
  }
  BigReal pre = exp(aw * log(zw) - zw - lgamma(aw + 1));
  return BigReal(min(BigReal(1, work), pre * sum), bits);
}

std::vector<BigReal> regularized_lower_gamma_ladder(unsigned max_power, const BigReal& z) {
  const PrecisionBits bits = z.precision();
  std::vector<BigReal> out(max_power + 1, BigReal::zero(bits));
  if (z.is_zero()) return out;
  if (z.is_inf()) {
    for (auto& v : out) v = BigReal(1, bits);
    return out;
  }
  const PrecisionBits work = bits + kGuardBits;
  const BigReal zw(z, work);
  const unsigned k = max_power;
  BigReal top = zw <= static_cast<double>(k + 1) ? lower_gamma_upper_series(k, zw, work)
                                                  : 1 - upper_gamma_finite(k, zw, work);
  // e^{-z} z^j / j! for j = 0..k
  std::vector<BigReal> poisson;
  poisson.reserve(k + 1);
  BigReal term = exp(-zw);
  poisson.push_back(term);
  for (unsigned j = 1; j <= k; ++j) {
    term *= zw;
    term /= static_cast<long>(j);
    poisson.push_back(term);
  }
  // out[j] = P(j+1, z); P(j, z) = P(j+1, z) + e^{-z} z^j / j!.
  out[k] = BigReal(top, bits);
  BigReal cur = top;
  for (unsigned j = k; j >= 1; --j) {
    cur += poisson[j];
    out[j - 1] = BigReal(cur, bits);
  }
  return out;
}

BigReal erfi(const BigReal& x) {
  const PrecisionBits bits = x.precision();
  const PrecisionBits work = bits + kGuardBits;
  if (x.is_zero()) return BigReal::zero(bits);
  const BigReal xw(x, work);
  const BigReal x2 = xw * xw;
  // s_k = x^{2k+1} / k!, summand s_k / (2k+1)
  BigReal power = xw;
  BigReal sum = xw;
  for (long k = 1;; ++k) {
    if (k > kSeriesTermCeiling) throw_ceiling("erfi");
    power *= x2;
    power /= k;
    BigReal term = power / (2 * k + 1);
    sum += term;
    BigReal rho = x2 / (k + 1);
    if (rho < 1.0) {
      BigReal tail = abs(term) * rho / (1 - rho);
      if (tail <= tail_target(sum, work)) break;
    }
  }
  return BigReal(sum * 2 / sqrt(BigReal::pi(work)), bits);
}

BigReal binomial(unsigned long n, unsigned long k, PrecisionBits bits) {
  if (k > n) return BigReal::zero(bits);
  k = std::min(k, n - k);
  BigReal r(1, bits + kGuardBits);
  for (unsigned long i = 1; i <= k; ++i) {
    r *= static_cast<long>(n - k + i);
    r /= static_cast<long>(i);
  }
  return BigReal(r, bits);
}

}  // namespace chisum
