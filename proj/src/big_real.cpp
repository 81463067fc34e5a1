#include "chisum/big_real.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "chisum/errors.hpp"

namespace chisum {

namespace {

std::atomic<PrecisionBits> g_default_precision{kDefaultPrecision};

PrecisionBits max_prec(const BigReal& a, const BigReal& b) {
  return std::max(a.precision(), b.precision());
}

}  // namespace

PrecisionBits default_precision() noexcept { return g_default_precision.load(std::memory_order_relaxed); }

void set_default_precision(PrecisionBits bits) {
  if (bits < kMinPrecision) throw DomainError("precision must be at least 64 bits");
  g_default_precision.store(bits, std::memory_order_relaxed);
}

BigReal::BigReal(PrecisionBits bits, Uninit) { mpfr_init2(v_, std::max(bits, PrecisionBits{MPFR_PREC_MIN})); }

BigReal::BigReal() : BigReal(default_precision(), Uninit{}) { mpfr_set_zero(v_, 1); }

BigReal::BigReal(double v, PrecisionBits bits) : BigReal(bits, Uninit{}) { mpfr_set_d(v_, v, MPFR_RNDN); }

BigReal::BigReal(const BigReal& other, PrecisionBits bits) : BigReal(bits, Uninit{}) {
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

BigReal::BigReal(const BigReal& other) : BigReal(other.precision(), Uninit{}) { mpfr_set(v_, other.v_, MPFR_RNDN); }

BigReal::BigReal(BigReal&& other) noexcept {
  v_[0] = other.v_[0];
  other.v_[0]._mpfr_d = nullptr;
}

BigReal& BigReal::operator=(const BigReal& other) {
  if (this == &other) return *this;
  if (v_[0]._mpfr_d == nullptr) {
    mpfr_init2(v_, other.precision());
  } else if (precision() != other.precision()) {
    mpfr_set_prec(v_, other.precision());
  }
  mpfr_set(v_, other.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator=(BigReal&& other) noexcept {
  if (this != &other) {
    if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
    v_[0] = other.v_[0];
    other.v_[0]._mpfr_d = nullptr;
  }
  return *this;
}

BigReal::~BigReal() {
  if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
}

BigReal BigReal::parse(std::string_view text, PrecisionBits bits) {
  BigReal r(bits, Uninit{});
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s == "inf" || s == "+inf" || s == "Infinity") {
    mpfr_set_inf(r.v_, 1);
    return r;
  }
  if (s == "-inf" || s == "-Infinity") {
    mpfr_set_inf(r.v_, -1);
    return r;
  }
  if (s.empty()) throw DomainError("empty decimal number");
  char* end = nullptr;
  mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
  if (end == s.c_str() || *end != '\0') throw DomainError("not a decimal number: '" + std::string(text) + "'");
  return r;
}

BigReal BigReal::zero(PrecisionBits bits) {
  BigReal r(bits, Uninit{});
  mpfr_set_zero(r.v_, 1);
  return r;
}

BigReal BigReal::infinity(int sign, PrecisionBits bits) {
  BigReal r(bits, Uninit{});
  mpfr_set_inf(r.v_, sign < 0 ? -1 : 1);
  return r;
}

BigReal BigReal::pi(PrecisionBits bits) {
  BigReal r(bits, Uninit{});
  mpfr_const_pi(r.v_, MPFR_RNDN);
  return r;
}

double BigReal::log_abs() const {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  if (!is_finite()) return is_nan() ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  long e = 0;
  double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
  return std::log(std::fabs(m)) + static_cast<double>(e) * std::log(2.0);
}

long BigReal::exponent2() const noexcept {
  if (is_zero()) return std::numeric_limits<long>::min() / 2;
  if (!is_finite()) return std::numeric_limits<long>::max() / 2;
  return static_cast<long>(mpfr_get_exp(v_)) - 1;
}

std::string BigReal::to_string(int digits) const {
  if (is_nan()) return "nan";
  if (is_inf()) return sign() < 0 ? "-inf" : "inf";
  if (digits <= 0) digits = static_cast<int>(std::ceil(static_cast<double>(precision()) * 0.30102999566398120)) + 1;
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", digits - 1, v_);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

BigReal& BigReal::operator+=(const BigReal& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_add(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator-=(const BigReal& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator*=(const BigReal& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator/=(const BigReal& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_div(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

void BigReal::add_product(const BigReal& a, const BigReal& b) {
  mpfr_fma(v_, a.v_, b.v_, v_, MPFR_RNDN);
}

BigReal BigReal::operator-() const {
  BigReal r(precision(), Uninit{});
  mpfr_neg(r.v_, v_, MPFR_RNDN);
  return r;
}

namespace {

template <class Op>
BigReal binary(const BigReal& a, const BigReal& b, Op op) {
  BigReal r = BigReal::zero(max_prec(a, b));
  op(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

template <class Op>
BigReal unary(const BigReal& x, Op op) {
  BigReal r = BigReal::zero(x.precision());
  op(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

}  // namespace

BigReal operator+(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_add); }
BigReal operator-(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_sub); }
BigReal operator*(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_mul); }
BigReal operator/(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_div); }
BigReal operator+(BigReal&& a, const BigReal& b) { return std::move(a += b); }
BigReal operator-(BigReal&& a, const BigReal& b) { return std::move(a -= b); }
BigReal operator*(BigReal&& a, const BigReal& b) { return std::move(a *= b); }
BigReal operator/(BigReal&& a, const BigReal& b) { return std::move(a /= b); }

int compare(const BigReal& a, const BigReal& b) noexcept { return mpfr_cmp(a.raw(), b.raw()); }
int compare(const BigReal& a, double b) noexcept { return mpfr_cmp_d(a.raw(), b); }

BigReal abs(BigReal x) {
  mpfr_abs(x.raw(), x.raw(), MPFR_RNDN);
  return x;
}
BigReal sqrt(const BigReal& x) { return unary(x, mpfr_sqrt); }
BigReal exp(const BigReal& x) { return unary(x, mpfr_exp); }
BigReal log(const BigReal& x) { return unary(x, mpfr_log); }
BigReal log1p(const BigReal& x) { return unary(x, mpfr_log1p); }
BigReal expm1(const BigReal& x) { return unary(x, mpfr_expm1); }
BigReal sin(const BigReal& x) { return unary(x, mpfr_sin); }
BigReal cos(const BigReal& x) { return unary(x, mpfr_cos); }
BigReal asin(const BigReal& x) { return unary(x, mpfr_asin); }
BigReal erf(const BigReal& x) { return unary(x, mpfr_erf); }
BigReal gamma(const BigReal& x) { return unary(x, mpfr_gamma); }

BigReal lgamma(const BigReal& x) {
  BigReal r = BigReal::zero(x.precision());
  int sign = 0;
  mpfr_lgamma(r.raw(), &sign, x.raw(), MPFR_RNDN);
  return r;
}

BigReal pow(const BigReal& x, long n) {
  BigReal r = BigReal::zero(x.precision());
  mpfr_pow_si(r.raw(), x.raw(), n, MPFR_RNDN);
  return r;
}

BigReal pow(const BigReal& x, const BigReal& y) { return binary(x, y, mpfr_pow); }

BigReal ldexp(BigReal x, long e) {
  mpfr_mul_2si(x.raw(), x.raw(), e, MPFR_RNDN);
  return x;
}

BigReal min(const BigReal& a, const BigReal& b) { return a <= b ? a : b; }
BigReal max(const BigReal& a, const BigReal& b) { return a >= b ? a : b; }

BigReal factorial(unsigned long n, PrecisionBits bits) {
  BigReal r = BigReal::zero(bits);
  mpfr_fac_ui(r.raw(), n, MPFR_RNDN);
  return r;
}

std::ostream& operator<<(std::ostream& os, const BigReal& x) {
  const auto p = os.precision();
  return os << x.to_string(p > 0 ? static_cast<int>(p) : 0);
}

}  // namespace chisum
