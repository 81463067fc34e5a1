#pragma once

// Extended-precision real built on MPFR.
//
// Every value carries its own precision in bits. Binary operations on two
// BigReals round to the larger of the two precisions; mixed operations with
// builtin arithmetic types use the BigReal operand's precision. MPFR's
// exponent range (about 2^{±2^30}) covers magnitudes far beyond e^{±10^6}.

#include <mpfr.h>

#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace chisum {

using PrecisionBits = mpfr_prec_t;

inline constexpr PrecisionBits kMinPrecision = 64;
inline constexpr PrecisionBits kDefaultPrecision = 256;

/// Process-wide default precision. Set it once at startup (before any worker
/// threads exist); afterwards it is only read.
PrecisionBits default_precision() noexcept;
void set_default_precision(PrecisionBits bits);

class BigReal {
 public:
  BigReal();
  explicit BigReal(double v, PrecisionBits bits = default_precision());
  template <std::integral I>
  explicit BigReal(I v, PrecisionBits bits = default_precision()) : BigReal(bits, Uninit{}) {
    if constexpr (std::is_signed_v<I>)
      mpfr_set_si(v_, static_cast<long>(v), MPFR_RNDN);
    else
      mpfr_set_ui(v_, static_cast<unsigned long>(v), MPFR_RNDN);
  }
  /// Copy of `other` rounded to `bits`.
  BigReal(const BigReal& other, PrecisionBits bits);

  BigReal(const BigReal& other);
  BigReal(BigReal&& other) noexcept;
  BigReal& operator=(const BigReal& other);
  BigReal& operator=(BigReal&& other) noexcept;
  ~BigReal();

  /// Parses decimal notation ("1.5e-300", "-inf", "inf", "nan").
  static BigReal parse(std::string_view text, PrecisionBits bits = default_precision());
  static BigReal zero(PrecisionBits bits = default_precision());
  static BigReal infinity(int sign = 1, PrecisionBits bits = default_precision());
  static BigReal pi(PrecisionBits bits = default_precision());

  PrecisionBits precision() const noexcept { return mpfr_get_prec(v_); }
  /// The same value rounded to a different precision.
  BigReal at_precision(PrecisionBits bits) const { return BigReal(*this, bits); }

  bool is_zero() const noexcept { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const noexcept { return mpfr_number_p(v_) != 0; }
  bool is_inf() const noexcept { return mpfr_inf_p(v_) != 0; }
  bool is_nan() const noexcept { return mpfr_nan_p(v_) != 0; }
  int sign() const noexcept { return mpfr_sgn(v_); }

  double to_double() const noexcept { return mpfr_get_d(v_, MPFR_RNDN); }
  long double to_long_double() const noexcept { return mpfr_get_ld(v_, MPFR_RNDN); }
  /// Natural log of |x| as a double; finite even when x itself underflows a double.
  double log_abs() const;
  /// log2|x| rounded towards -inf, or a very negative number for zero.
  long exponent2() const noexcept;

  /// Scientific decimal string. digits == 0 selects enough digits to round-trip.
  std::string to_string(int digits = 0) const;

  BigReal& operator+=(const BigReal& o);
  BigReal& operator-=(const BigReal& o);
  BigReal& operator*=(const BigReal& o);
  BigReal& operator/=(const BigReal& o);
  BigReal& operator+=(long o) { mpfr_add_si(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator-=(long o) { mpfr_sub_si(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator*=(long o) { mpfr_mul_si(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator/=(long o) { mpfr_div_si(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator+=(double o) { mpfr_add_d(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator-=(double o) { mpfr_sub_d(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator*=(double o) { mpfr_mul_d(v_, v_, o, MPFR_RNDN); return *this; }
  BigReal& operator/=(double o) { mpfr_div_d(v_, v_, o, MPFR_RNDN); return *this; }
  template <std::integral I>
  BigReal& operator+=(I o) { return *this += static_cast<long>(o); }
  template <std::integral I>
  BigReal& operator-=(I o) { return *this -= static_cast<long>(o); }
  template <std::integral I>
  BigReal& operator*=(I o) { return *this *= static_cast<long>(o); }
  template <std::integral I>
  BigReal& operator/=(I o) { return *this /= static_cast<long>(o); }

  /// this += a * b without a temporary for the product.
  void add_product(const BigReal& a, const BigReal& b);

  BigReal operator-() const;

  mpfr_ptr raw() noexcept { return v_; }
  mpfr_srcptr raw() const noexcept { return v_; }

 private:
  struct Uninit {};
  BigReal(PrecisionBits bits, Uninit);

  mpfr_t v_;
};

// Arithmetic. Rvalue left operands are reused when their precision suffices.
BigReal operator+(const BigReal& a, const BigReal& b);
BigReal operator-(const BigReal& a, const BigReal& b);
BigReal operator*(const BigReal& a, const BigReal& b);
BigReal operator/(const BigReal& a, const BigReal& b);
BigReal operator+(BigReal&& a, const BigReal& b);
BigReal operator-(BigReal&& a, const BigReal& b);
BigReal operator*(BigReal&& a, const BigReal& b);
BigReal operator/(BigReal&& a, const BigReal& b);

template <class T>
concept Arithmetic = std::integral<T> || std::floating_point<T>;

template <Arithmetic T>
BigReal operator+(BigReal a, T b) { return a += b; }
template <Arithmetic T>
BigReal operator-(BigReal a, T b) { return a -= b; }
template <Arithmetic T>
BigReal operator*(BigReal a, T b) { return a *= b; }
template <Arithmetic T>
BigReal operator/(BigReal a, T b) { return a /= b; }
template <Arithmetic T>
BigReal operator+(T a, BigReal b) { return b += a; }
template <Arithmetic T>
BigReal operator*(T a, BigReal b) { return b *= a; }
template <Arithmetic T>
BigReal operator-(T a, const BigReal& b) { return -(b - a); }
template <Arithmetic T>
BigReal operator/(T a, const BigReal& b) { return BigReal(a, b.precision()) / b; }

int compare(const BigReal& a, const BigReal& b) noexcept;
int compare(const BigReal& a, double b) noexcept;
inline bool operator==(const BigReal& a, const BigReal& b) noexcept { return compare(a, b) == 0; }
inline bool operator<(const BigReal& a, const BigReal& b) noexcept { return compare(a, b) < 0; }
inline bool operator>(const BigReal& a, const BigReal& b) noexcept { return compare(a, b) > 0; }
inline bool operator<=(const BigReal& a, const BigReal& b) noexcept { return compare(a, b) <= 0; }
inline bool operator>=(const BigReal& a, const BigReal& b) noexcept { return compare(a, b) >= 0; }
inline bool operator==(const BigReal& a, double b) noexcept { return compare(a, b) == 0; }
inline bool operator<(const BigReal& a, double b) noexcept { return compare(a, b) < 0; }
inline bool operator>(const BigReal& a, double b) noexcept { return compare(a, b) > 0; }
inline bool operator<=(const BigReal& a, double b) noexcept { return compare(a, b) <= 0; }
inline bool operator>=(const BigReal& a, double b) noexcept { return compare(a, b) >= 0; }

BigReal abs(BigReal x);
BigReal sqrt(const BigReal& x);
BigReal exp(const BigReal& x);
BigReal log(const BigReal& x);
BigReal log1p(const BigReal& x);
BigReal expm1(const BigReal& x);
BigReal sin(const BigReal& x);
BigReal cos(const BigReal& x);
BigReal asin(const BigReal& x);
BigReal erf(const BigReal& x);
BigReal gamma(const BigReal& x);
BigReal lgamma(const BigReal& x);
BigReal pow(const BigReal& x, long n);
BigReal pow(const BigReal& x, const BigReal& y);
BigReal ldexp(BigReal x, long e);
BigReal min(const BigReal& a, const BigReal& b);
BigReal max(const BigReal& a, const BigReal& b);
BigReal factorial(unsigned long n, PrecisionBits bits = default_precision());

std::ostream& operator<<(std::ostream& os, const BigReal& x);

}  // namespace chisum
