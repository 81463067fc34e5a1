#include "chisum/exp_poly.hpp"

#include <algorithm>
#include <string>

#include "chisum/errors.hpp"
#include "chisum/special_functions.hpp"

namespace chisum {

namespace {

constexpr PrecisionBits kGuardBits = 32;

bool trailing_zero(const std::vector<BigReal>& c) { return !c.empty() && c.back().is_zero(); }

// Symmetric table t[i][j] = C(i + j, i).
std::vector<std::vector<BigReal>> binomial_table(std::size_t n, PrecisionBits bits) {
  std::vector<std::vector<BigReal>> t(n, std::vector<BigReal>(n, BigReal(1, bits)));
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j) t[i][j] = t[i - 1][j] + t[i][j - 1];
  return t;
}

// Principal part at rate a of L[f_a] * L[g_b], in the basis (s - a)^{-(i+1)}.
// alpha, beta are Laplace coefficients (power coefficient times power!).
std::vector<BigReal> principal_part(const std::vector<BigReal>& alpha, const std::vector<BigReal>& beta,
                                    const BigReal& d, const std::vector<std::vector<BigReal>>& binom,
                                    PrecisionBits bits) {
  const std::size_t na = alpha.size();
  const std::size_t nb = beta.size();
  std::vector<BigReal> inv_pow(na + nb + 1, BigReal(1, bits));
  const BigReal inv = BigReal(1, bits) / d;
  for (std::size_t j = 1; j < inv_pow.size(); ++j) inv_pow[j] = inv_pow[j - 1] * inv;

  std::vector<BigReal> c(na, BigReal::zero(bits));
  for (std::size_t k = 0; k < na; ++k) {
    BigReal acc = BigReal::zero(bits);
    for (std::size_t m = 0; m < nb; ++m) {
      if (beta[m].is_zero()) continue;
      acc.add_product(beta[m] * binom[m][k], inv_pow[m + 1 + k]);
    }
    c[k] = (k % 2 == 0) ? std::move(acc) : -acc;
  }
  std::vector<BigReal> gamma(na, BigReal::zero(bits));
  for (std::size_t i = 0; i < na; ++i) {
    BigReal acc = BigReal::zero(bits);
    for (std::size_t n = i; n < na; ++n) {
      if (alpha[n].is_zero()) continue;
      acc.add_product(alpha[n], c[n - i]);
    }
    gamma[i] = std::move(acc);
  }
  return gamma;
}

std::vector<BigReal> to_laplace(const std::vector<BigReal>& coeffs, PrecisionBits bits) {
  std::vector<BigReal> out;
  out.reserve(coeffs.size());
  BigReal fact(1, bits);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k > 0) fact *= static_cast<long>(k);
    out.push_back(BigReal(coeffs[k], bits) * fact);
  }
  return out;
}

std::vector<BigReal> from_laplace(std::vector<BigReal> alpha) {
  if (alpha.empty()) return alpha;
  BigReal fact(1, alpha.front().precision());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k > 0) fact *= static_cast<long>(k);
    alpha[k] /= fact;
  }
  return alpha;
}

// int_0^t x^k e^{b x} dx for b > 0: t^{k+1} sum_j (b t)^j / (j! (k + 1 + j)), all terms positive.
BigReal growing_moment(unsigned k, const BigReal& b, const BigReal& t) {
  const PrecisionBits bits = std::max(b.precision(), t.precision());
  const BigReal bt = b * t;
  BigReal power(1, bits);
  BigReal sum = BigReal::zero(bits);
  for (long j = 0; j < kSeriesTermCeiling; ++j) {
    if (j > 0) {
      power *= bt;
      power /= j;
    }
    const BigReal term = power / static_cast<long>(k + 1 + j);
    sum += term;
    if (static_cast<double>(j) > bt.to_double() && term <= ldexp(sum, -(bits + 8))) return sum * pow(t, k + 1);
  }
  throw NonConvergence("exponential moment series exceeded its term ceiling");
}

}  // namespace

ExpPolySum::ExpPolySum(unsigned degree_cap) : degree_cap_(degree_cap) {
  if (degree_cap == 0) throw DomainError("degree_cap must be positive");
}

ExpPolySum ExpPolySum::from_terms(const std::vector<Term>& terms, unsigned degree_cap) {
  ExpPolySum s(degree_cap);
  for (const auto& t : terms) s.add(t);
  return s;
}

ExpPolySum ExpPolySum::from_block(BigReal rate, std::vector<BigReal> coeffs, unsigned degree_cap) {
  ExpPolySum s(degree_cap);
  s.add_block(rate, coeffs);
  return s;
}

std::size_t ExpPolySum::find_or_insert(const BigReal& rate) {
  auto it = std::lower_bound(blocks_.begin(), blocks_.end(), rate,
                             [](const Block& b, const BigReal& r) { return b.rate > r; });
  if (it != blocks_.end() && it->rate == rate) return static_cast<std::size_t>(it - blocks_.begin());
  it = blocks_.insert(it, Block{rate, {}});
  return static_cast<std::size_t>(it - blocks_.begin());
}

void ExpPolySum::trim() {
  for (auto& b : blocks_)
    while (trailing_zero(b.coeffs)) b.coeffs.pop_back();
  std::erase_if(blocks_, [](const Block& b) { return b.coeffs.empty(); });
}

void ExpPolySum::add(const Term& t) {
  if (t.power >= degree_cap_)
    throw DomainError("term power " + std::to_string(t.power) + " exceeds degree cap " + std::to_string(degree_cap_));
  if (t.coeff.is_zero()) return;
  Block& b = blocks_[find_or_insert(t.rate)];
  if (b.coeffs.size() <= t.power) b.coeffs.resize(t.power + 1, BigReal::zero(t.coeff.precision()));
  b.coeffs[t.power] += t.coeff;
  trim();
}

void ExpPolySum::add_block(const BigReal& rate, const std::vector<BigReal>& coeffs) {
  if (coeffs.size() > degree_cap_)
    throw DomainError("block degree " + std::to_string(coeffs.size() - 1) + " exceeds degree cap " +
                      std::to_string(degree_cap_));
  if (coeffs.empty()) return;
  Block& b = blocks_[find_or_insert(rate)];
  if (b.coeffs.size() < coeffs.size()) b.coeffs.resize(coeffs.size(), BigReal::zero(coeffs.front().precision()));
  for (std::size_t k = 0; k < coeffs.size(); ++k) b.coeffs[k] += coeffs[k];
  trim();
}

std::vector<Term> ExpPolySum::terms() const {
  std::vector<Term> out;
  for (const auto& b : blocks_)
    for (std::size_t k = 0; k < b.coeffs.size(); ++k)
      if (!b.coeffs[k].is_zero()) out.push_back({b.coeffs[k], b.rate, static_cast<unsigned>(k)});
  return out;
}

std::size_t ExpPolySum::term_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_)
    for (const auto& c : b.coeffs) n += c.is_zero() ? 0 : 1;
  return n;
}

unsigned ExpPolySum::max_power() const {
  std::size_t m = 0;
  for (const auto& b : blocks_) m = std::max(m, b.coeffs.size());
  return m == 0 ? 0 : static_cast<unsigned>(m - 1);
}

PrecisionBits ExpPolySum::precision() const {
  PrecisionBits p = kMinPrecision;
  for (const auto& b : blocks_) {
    p = std::max(p, b.rate.precision());
    for (const auto& c : b.coeffs) p = std::max(p, c.precision());
  }
  return p;
}

ExpPolySum ExpPolySum::scaled(const BigReal& factor) const {
  ExpPolySum out = *this;
  for (auto& b : out.blocks_)
    for (auto& c : b.coeffs) c *= factor;
  out.trim();
  return out;
}

ExpPolySum convolve_terms(const Term& f, const Term& g, unsigned degree_cap) {
  if (f.rate == g.rate) throw EqualRates("convolve_terms: both terms have rate " + f.rate.to_string(20));
  const PrecisionBits bits = std::max({f.coeff.precision(), g.coeff.precision(), f.rate.precision(),
                                       g.rate.precision()});
  const PrecisionBits work = bits + kGuardBits;
  const long n = f.power;
  const long m = g.power;
  const long r = n + 1;
  const long s = n + m + 2;
  const BigReal d = BigReal(f.rate, work) - BigReal(g.rate, work);
  const KummerReduction red = kummer_1f1_integer_reduction(r, s, work);
  // c1 c2 n! m! / (n+m+1)! d^{1-s}
  const BigReal scale = BigReal(f.coeff, work) * g.coeff * factorial(n, work) * factorial(m, work) /
                        factorial(n + m + 1, work) * pow(d, 1 - s);
  std::vector<BigReal> at_g, at_f;
  BigReal dk(1, work);
  for (std::size_t k = 0; k < std::max(red.p.size(), red.q.size()); ++k) {
    if (k > 0) dk *= d;
    if (k < red.p.size()) at_g.emplace_back(scale * red.p[k] * dk, bits);
    if (k < red.q.size()) at_f.emplace_back(scale * red.q[k] * dk, bits);
  }
  ExpPolySum out(degree_cap);
  out.add_block(BigReal(f.rate, bits), at_f);
  out.add_block(BigReal(g.rate, bits), at_g);
  return out;
}

ExpPolySum convolve_sums(const ExpPolySum& f, const ExpPolySum& g) {
  ExpPolySum out(std::max(f.degree_cap(), g.degree_cap()));
  if (f.empty() || g.empty()) return out;
  const PrecisionBits bits = std::max(f.precision(), g.precision());
  const PrecisionBits work = bits + kGuardBits;
  std::size_t width = 0;
  for (const auto& b : f.blocks()) width = std::max(width, b.coeffs.size());
  for (const auto& b : g.blocks()) width = std::max(width, b.coeffs.size());
  const auto binom = binomial_table(width + 1, work);

  std::vector<std::vector<BigReal>> alphas, betas;
  for (const auto& b : f.blocks()) alphas.push_back(to_laplace(b.coeffs, work));
  for (const auto& b : g.blocks()) betas.push_back(to_laplace(b.coeffs, work));

  // Accumulate per rate of f and per rate of g, then convert back once.
  std::vector<std::vector<BigReal>> acc_f(f.rate_count()), acc_g(g.rate_count());
  for (std::size_t i = 0; i < f.rate_count(); ++i) acc_f[i].assign(alphas[i].size(), BigReal::zero(work));
  for (std::size_t j = 0; j < g.rate_count(); ++j) acc_g[j].assign(betas[j].size(), BigReal::zero(work));

  for (std::size_t i = 0; i < f.rate_count(); ++i) {
    const BigReal a(f.blocks()[i].rate, work);
    for (std::size_t j = 0; j < g.rate_count(); ++j) {
      const BigReal& b = g.blocks()[j].rate;
      if (a == b) throw EqualRates("convolve_sums: shared rate " + a.to_string(20));
      const BigReal d = a - b;
      const auto pa = principal_part(alphas[i], betas[j], d, binom, work);
      const auto pb = principal_part(betas[j], alphas[i], -d, binom, work);
      for (std::size_t k = 0; k < pa.size(); ++k) acc_f[i][k] += pa[k];
      for (std::size_t k = 0; k < pb.size(); ++k) acc_g[j][k] += pb[k];
    }
  }
  auto emit = [&](const BigReal& rate, std::vector<BigReal> alpha) {
    auto coeffs = from_laplace(std::move(alpha));
    std::vector<BigReal> rounded;
    rounded.reserve(coeffs.size());
    for (const auto& c : coeffs) rounded.emplace_back(c, bits);
    out.add_block(BigReal(rate, bits), rounded);
  };
  for (std::size_t i = 0; i < f.rate_count(); ++i) emit(f.blocks()[i].rate, std::move(acc_f[i]));
  for (std::size_t j = 0; j < g.rate_count(); ++j) emit(g.blocks()[j].rate, std::move(acc_g[j]));
  return out;
}

Magnitude evaluate_with_magnitude(const ExpPolySum& f, const BigReal& x) {
  if (x < 0.0) throw DomainError("evaluate needs x >= 0");
  const PrecisionBits bits = std::max(f.precision(), x.precision());
  const BigReal xw(x, bits);
  BigReal value = BigReal::zero(bits);
  BigReal abs_sum = BigReal::zero(bits);
  for (const auto& b : f.blocks()) {
    BigReal poly = BigReal::zero(bits);
    BigReal apoly = BigReal::zero(bits);
    for (auto it = b.coeffs.rbegin(); it != b.coeffs.rend(); ++it) {
      poly *= xw;
      poly += *it;
      apoly *= xw;
      if (it->sign() < 0)
        apoly -= *it;
      else
        apoly += *it;
    }
    BigReal e(b.rate, bits);
    e *= xw;
    mpfr_exp(e.raw(), e.raw(), MPFR_RNDN);
    value.add_product(poly, e);
    abs_sum.add_product(apoly, e);
  }
  return {value, abs_sum};
}

BigReal evaluate(const ExpPolySum& f, const BigReal& x) { return evaluate_with_magnitude(f, x).value; }

Magnitude integrate_with_magnitude(const ExpPolySum& f, const BigReal& t) {
  if (t < 0.0) throw DomainError("integrate needs t >= 0");
  const PrecisionBits bits = std::max(f.precision(), t.precision());
  BigReal value = BigReal::zero(bits);
  BigReal abs_sum = BigReal::zero(bits);
  if (t.is_zero()) return {value, abs_sum};
  for (const auto& b : f.blocks()) {
    const BigReal rate(b.rate, bits);
    const auto K = static_cast<unsigned>(b.coeffs.size() - 1);
    std::vector<BigReal> moments;
    moments.reserve(K + 1);
    if (rate < 0.0) {
      // k! / (-b)^{k+1} P(k+1, -b t)
      const BigReal neg = -rate;
      const BigReal inv = BigReal(1, bits) / neg;
      std::vector<BigReal> ladder = t.is_inf() ? std::vector<BigReal>(K + 1, BigReal(1, bits))
                                               : regularized_lower_gamma_ladder(K, neg * BigReal(t, bits));
      BigReal full = inv;
      for (unsigned k = 0; k <= K; ++k) {
        if (k > 0) full *= inv * static_cast<long>(k);
        moments.push_back(full * ladder[k]);
      }
    } else if (t.is_inf()) {
      throw DomainError("integrate to +inf needs every rate negative, found " + rate.to_string(20));
    } else if (rate.is_zero()) {
      BigReal tp(t, bits);
      for (unsigned k = 0; k <= K; ++k) {
        moments.push_back(tp / static_cast<long>(k + 1));
        tp *= t;
      }
    } else {
      for (unsigned k = 0; k <= K; ++k) moments.push_back(growing_moment(k, rate, BigReal(t, bits)));
    }
    for (unsigned k = 0; k <= K; ++k) {
      if (b.coeffs[k].is_zero()) continue;
      value.add_product(b.coeffs[k], moments[k]);
      abs_sum.add_product(abs(b.coeffs[k]), moments[k]);
    }
  }
  return {value, abs_sum};
}

BigReal integrate(const ExpPolySum& f, const BigReal& t) { return integrate_with_magnitude(f, t).value; }

BigReal term_sup(const BigReal& rate, unsigned power, const BigReal& x_max) {
  const PrecisionBits bits = std::max(rate.precision(), x_max.precision());
  if (power == 0) return rate < 0.0 ? BigReal(1, bits) : exp(rate * x_max);
  BigReal x(x_max, bits);
  if (rate < 0.0) {
    const BigReal peak = BigReal(static_cast<long>(power), bits) / -rate;
    if (peak < x) x = peak;
  }
  return pow(x, static_cast<long>(power)) * exp(rate * x);
}

PruneResult prune(const ExpPolySum& f, const BigReal& x_max) {
  const PrecisionBits bits = f.precision();
  BigReal largest = BigReal::zero(bits);
  std::vector<std::vector<BigReal>> sups;
  for (const auto& b : f.blocks()) {
    sups.emplace_back();
    for (std::size_t k = 0; k < b.coeffs.size(); ++k) {
      sups.back().push_back(abs(b.coeffs[k]) * term_sup(b.rate, static_cast<unsigned>(k), x_max));
      if (sups.back().back() > largest) largest = sups.back().back();
    }
  }
  const BigReal threshold = ldexp(largest, -static_cast<long>(bits));
  PruneResult out{ExpPolySum(f.degree_cap()), BigReal::zero(bits), 0};
  for (std::size_t i = 0; i < f.blocks().size(); ++i) {
    std::vector<BigReal> kept = f.blocks()[i].coeffs;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (kept[k].is_zero() || sups[i][k] >= threshold) continue;
      out.slack += sups[i][k];
      kept[k] = BigReal::zero(bits);
      ++out.dropped;
    }
    out.sum.add_block(f.blocks()[i].rate, kept);
  }
  return out;
}

}  // namespace chisum
