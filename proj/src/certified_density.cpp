#include "chisum/certified_density.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "chisum/errors.hpp"
#include "chisum/quadrature.hpp"
#include "chisum/special_functions.hpp"

namespace chisum {

namespace {

constexpr int kJitterRetries = 3;

BigReal gamma_rate(const BigReal& w) { return BigReal(-1, w.precision()) / (2 * w); }

ExpPolySum gamma_factor_sum(const GammaFactor& g, unsigned cap) {
  const BigReal two_w = 2 * g.weight;
  const BigReal c = BigReal(1, g.weight.precision()) /
                    (factorial(g.shape - 1, g.weight.precision()) * pow(two_w, static_cast<long>(g.shape)));
  return ExpPolySum::from_terms({{c, gamma_rate(g.weight), g.shape - 1}}, cap);
}

// K e^{rate z} z^nu sum_{j<=m} t_j (s z)^j, optionally plus the Lagrange term.
ExpPolySum pair_factor_sum(const PairSpec& p, unsigned m, const BigReal& x_max, bool envelope, unsigned cap) {
  const PrecisionBits bits = p.rate.precision();
  const auto t = bessel_i_taylor_coeffs(p.nu, m, bits);
  std::vector<BigReal> coeffs(p.nu + m + (envelope ? 2 : 1), BigReal::zero(bits));
  BigReal sj(1, bits);
  for (unsigned j = 0; j <= m; ++j) {
    if (j > 0) sj *= p.bessel_scale;
    if (!t[j].is_zero()) coeffs[p.nu + j] = p.constant * t[j] * sj;
  }
  if (envelope) {
    const BigReal y = p.bessel_scale * x_max;
    coeffs[p.nu + m + 1] = p.constant * sj * p.bessel_scale / factorial(m + 1, bits) *
                           bessel_i_derivative(p.nu, m + 1, y);
  }
  return ExpPolySum::from_block(p.rate, coeffs, cap);
}

struct FactorRate {
  BigReal rate;
  int pair = -1;  // index into pairs, or -1 for a gamma factor
};

bool near(const BigReal& x, const BigReal& y, long rel_bits) {
  if (x == y) return true;
  return abs(x - y) < ldexp(max(abs(x), abs(y)), -rel_bits);
}

// chi-square(r) density of the leftover weight c after the substitution u = w^2.
struct LeftoverKernel {
  BigReal inv_two_c;
  BigReal norm;
  unsigned dof;

  LeftoverKernel(const BigReal& c, unsigned r) : inv_two_c(BigReal(1, c.precision()) / (2 * c)), dof(r) {
    const BigReal half_r = BigReal(static_cast<long>(r), c.precision()) / 2;
    norm = 2 / (pow(2 * c, half_r) * gamma(half_r));
  }
  BigReal operator()(const BigReal& w) const {
    BigReal v = norm * exp(-(w * w) * inv_two_c);
    if (dof > 1) v *= pow(w, static_cast<long>(dof - 1));
    return v;
  }
};

BigReal single_weight_pdf(const BigReal& c, unsigned r, const BigReal& x) {
  if (x.is_zero()) {
    if (r == 1) return BigReal::infinity(1, x.precision());
    return r == 2 ? BigReal(1, x.precision()) / (2 * c) : BigReal::zero(x.precision());
  }
  const BigReal half_r = BigReal(static_cast<long>(r), x.precision()) / 2;
  return pow(x, half_r - 1) * exp(-x / (2 * c)) / (pow(2 * c, half_r) * gamma(half_r));
}

double cancellation(const Magnitude& m) {
  if (m.value.is_zero() || m.abs_sum.is_zero()) return 0;
  return std::max(0.0, (m.abs_sum.log_abs() - m.value.log_abs()) / std::log(2.0));
}

// Allowance for rounding in sums whose absolute-value sum is `scale`.
BigReal rounding(const BigReal& scale) { return ldexp(scale, -(scale.precision() - 16)); }

void finish(const CertifiedDensity& d, BigReal lo, BigReal hi, Bounds& out) {
  if (lo < 0.0) lo = BigReal::zero(lo.precision());
  if (!d.jitter_bound.is_zero()) {
    lo *= 1 - d.jitter_bound;
    hi *= 1 + d.jitter_bound;
  }
  out.lo = std::move(lo);
  out.hi = std::move(hi);
}

void check_range(const CertifiedDensity& d, const BigReal& x, const char* what) {
  if (x < 0.0 || x > d.x_max)
    throw DomainError(std::string(what) + " argument " + x.to_string(12) + " outside the certified range [0, " +
                      d.x_max.to_string(12) + "]");
}

}  // namespace

WeightList make_weight_list(const std::vector<BigReal>& weights, unsigned dof, PrecisionBits bits) {
  if (weights.empty()) throw DomainError("weight list is empty");
  if (dof == 0) throw DomainError("degrees of freedom must be positive");
  WeightList w;
  w.dof = dof;
  for (const auto& v : weights) {
    if (!v.is_finite() || v <= 0.0) throw DomainError("weights must be positive and finite, got " + v.to_string(12));
    w.weights.emplace_back(v, bits);
  }
  std::sort(w.weights.begin(), w.weights.end());
  return w;
}

WeightList make_weight_list(const std::vector<double>& weights, unsigned dof, PrecisionBits bits) {
  std::vector<BigReal> big;
  for (double v : weights) {
    if (!std::isfinite(v) || v <= 0) throw DomainError("weights must be positive and finite, got " + std::to_string(v));
    big.emplace_back(v, bits);
  }
  return make_weight_list(big, dof, bits);
}

PairSpec make_pair(const BigReal& a, const BigReal& b, unsigned dof) {
  if (!(a < b)) throw DomainError("pair weights must satisfy a < b");
  if (dof % 2 == 0) throw DomainError("Bessel pairs need odd degrees of freedom");
  const PrecisionBits bits = std::max(a.precision(), b.precision());
  PairSpec p{BigReal(a, bits), BigReal(b, bits), (dof - 1) / 2, {}, {}, {}};
  const BigReal four_ab = 4 * p.a * p.b;
  p.rate = -(p.a + p.b) / four_ab;
  p.bessel_scale = (p.b - p.a) / four_ab;
  // (4ab)^{-r/2} nu! / (r-1)! (s/2)^{-nu}
  BigReal k = BigReal(1, bits) / (sqrt(four_ab) * pow(four_ab, static_cast<long>(p.nu)));
  k *= factorial(p.nu, bits) / factorial(dof - 1, bits);
  k *= pow(ldexp(p.bessel_scale, -1), -static_cast<long>(p.nu));
  p.constant = std::move(k);
  return p;
}

Pairing pair_weights(const WeightList& w) {
  if (w.weights.empty()) throw DomainError("weight list is empty");
  for (const auto& v : w.weights)
    if (!(v > 0.0)) throw DomainError("weights must be positive");
  const PrecisionBits bits = w.weights.front().precision();
  Pairing out;
  out.jitter = BigReal::zero(bits);

  std::vector<std::pair<BigReal, unsigned>> runs;
  for (const auto& v : w.weights) {
    if (!runs.empty() && runs.back().first == v)
      ++runs.back().second;
    else
      runs.push_back({v, 1});
  }
  std::vector<BigReal> singles;
  for (const auto& [v, count] : runs) {
    if (w.dof % 2 == 0) {
      out.gammas.push_back({v, count * w.dof / 2});
      continue;
    }
    if (count >= 2) out.gammas.push_back({v, (count / 2) * w.dof});
    if (count % 2 == 1) singles.push_back(v);
  }
  if (singles.size() % 2 == 1) {
    out.leftover = singles.back();
    singles.pop_back();
  }
  for (std::size_t i = 0; i + 1 < singles.size(); i += 2) out.pairs.push_back(make_pair(singles[i], singles[i + 1], w.dof));

  // Separate exactly or nearly equal rates by scaling a pair's weights.
  const long near_bits = static_cast<long>(bits / 4);
  const BigReal eps = ldexp(BigReal(1, bits), -static_cast<long>(bits / 8));
  for (int attempt = 0;; ++attempt) {
    std::vector<FactorRate> rates;
    for (const auto& g : out.gammas) rates.push_back({gamma_rate(g.weight), -1});
    for (std::size_t i = 0; i < out.pairs.size(); ++i) rates.push_back({out.pairs[i].rate, static_cast<int>(i)});
    int victim = -1;
    bool collision = false;
    for (std::size_t i = 0; i < rates.size() && !collision; ++i)
      for (std::size_t j = i + 1; j < rates.size() && !collision; ++j)
        if (near(rates[i].rate, rates[j].rate, near_bits)) {
          collision = true;
          victim = std::max(rates[i].pair, rates[j].pair);
        }
    if (!collision) break;
    if (attempt >= kJitterRetries || victim < 0)
      throw EqualRates("rate collision between factors persists after jitter");
    PairSpec& p = out.pairs[static_cast<std::size_t>(victim)];
    p = make_pair(p.a * (1 + eps), p.b * (1 + eps), w.dof);
    out.jitter += eps;
  }
  return out;
}

BigReal pair_density_exact(const PairSpec& p, const BigReal& x) {
  const PrecisionBits bits = std::max(p.rate.precision(), x.precision());
  if (x < 0.0) return BigReal::zero(bits);
  const BigReal xb(x, bits);
  BigReal v = p.constant * exp(p.rate * xb) * bessel_i(p.nu, p.bessel_scale * xb).value;
  if (p.nu > 0) v *= pow(xb, static_cast<long>(p.nu));
  return v;
}

unsigned select_order(const PairSpec& p, const BigReal& x_max, const BigReal& budget, unsigned degree_cap) {
  if (!(budget > 0.0) || !(budget < 1.0)) throw DomainError("budget must lie in (0, 1)");
  const PrecisionBits bits = p.rate.precision();
  const BigReal y = p.bessel_scale * x_max;
  if (y.is_zero()) return p.nu;

  auto integrand = [&](const BigReal& t) { return exp(p.rate * t) * bessel_i(p.nu, p.bessel_scale * t).value; };
  const BigReal zero = BigReal::zero(bits);
  const BigReal xm(x_max, bits);
  BigReal prev = gauss_legendre<BigReal>(integrand, zero, xm, 16);
  BigReal full;
  for (int n = 32;; n *= 2) {
    full = gauss_legendre<BigReal>(integrand, zero, xm, n);
    if (abs(full - prev) <= ldexp(abs(full), -static_cast<long>(bits / 4))) break;
    if (n > 4096) throw QuadratureFailure("select_order: reference integral did not settle");
    prev = full;
  }
  const BigReal target = (1 - budget) * full;
  const auto t = bessel_i_taylor_coeffs(p.nu, degree_cap, bits);
  ExpPolySum partial(degree_cap);
  BigReal sj = pow(p.bessel_scale, static_cast<long>(p.nu));
  for (unsigned m = p.nu; m + 2 <= degree_cap; m += 2) {
    if (m > p.nu) sj *= p.bessel_scale * p.bessel_scale;
    partial.add({t[m] * sj, p.rate, m});
    if (integrate(partial, xm) >= target) return m;
  }
  throw BudgetUnreachable("no Taylor order below the degree cap meets the budget");
}

BigReal envelope_ratio(const PairSpec& p, unsigned m, const BigReal& x_max) {
  const PrecisionBits bits = p.rate.precision();
  const BigReal y = p.bessel_scale * x_max;
  // Lagrange term over the smallest lower-polynomial term (s z / 2)^nu / nu!.
  BigReal ratio = pow(y, static_cast<long>(m + 1)) / factorial(m + 1, bits) * bessel_i_derivative(p.nu, m + 1, y);
  if (p.nu > 0) ratio *= factorial(p.nu, bits) * pow(2 / y, static_cast<long>(p.nu));
  return ratio;
}

void verify_pair_normalization() {
  static std::once_flag once;
  std::call_once(once, [] {
    constexpr PrecisionBits bits = 128;
    for (unsigned r : {1u, 3u}) {
      const PairSpec p = make_pair(BigReal(1, bits), BigReal(2, bits), r);
      // Tail beyond 2b * 100 is below e^{-100} times a low-degree polynomial.
      const auto q = integrate_adaptive<BigReal>([&](const BigReal& x) { return pair_density_exact(p, x); },
                                                 BigReal::zero(bits), BigReal(400, bits), BigReal(1e-30, bits));
      if (abs(q.value - 1) > 1e-20)
        throw Error("pair density constant fails to normalize for r = " + std::to_string(r) + ": integral " +
                    q.value.to_string(25));
    }
  });
}

CertifiedDensity build(const WeightList& w, const BigReal& x_max, const BigReal& R_max, const BuildOptions& options) {
  if (!(R_max > 0.0) || !(R_max < 1.0)) throw DomainError("R_max must lie in (0, 1)");
  if (!(x_max > 0.0) || !x_max.is_finite()) throw DomainError("x_max must be positive and finite");
  verify_pair_normalization();
  const PrecisionBits bits = w.weights.empty() ? default_precision() : w.weights.front().precision();
  const unsigned cap = options.degree_cap;

  CertifiedDensity d{ExpPolySum(cap), ExpPolySum(cap), BigReal(1, bits), BigReal(x_max, bits), BigReal(R_max, bits),
                     {}, BigReal::zero(bits), BigReal::zero(bits), w.dof, pair_weights(w)};
  const auto& pairs = d.pairing.pairs;
  if (options.orders && options.orders->size() != pairs.size())
    throw DomainError("explicit order list needs one entry per pair");

  d.plan.x_max = d.x_max;
  d.plan.budget_per_pair = pairs.empty() ? d.R_max : d.R_max / static_cast<long>(pairs.size());
  unsigned max_degree = 0;
  for (const auto& g : d.pairing.gammas) max_degree = std::max(max_degree, g.shape - 1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairSpec& p = pairs[i];
    unsigned m = 0;
    if (options.orders) {
      m = (*options.orders)[i];
    } else {
      m = select_order(p, d.x_max, d.plan.budget_per_pair, cap);
      while (envelope_ratio(p, m, d.x_max) > d.plan.budget_per_pair) {
        m += 2;
        if (p.nu + m + 2 > cap) throw BudgetUnreachable("envelope order exceeds the degree cap");
      }
    }
    if (p.nu + m + 2 > cap) throw BudgetUnreachable("pair order exceeds the degree cap");
    d.plan.orders.push_back(m);
    max_degree = std::max(max_degree, p.nu + m + 1);
  }

  // Jittered rates sit 2^{-bits/8} apart; partial fractions across such a gap
  // cancel about bits/8 bits per unit of degree.
  if (!d.pairing.jitter.is_zero()) {
    const PrecisionBits work = bits + static_cast<PrecisionBits>(bits / 8) * (2 * max_degree + 2) + 32;
    for (auto& g : d.pairing.gammas) g.weight = BigReal(g.weight, work);
    for (auto& p : d.pairing.pairs) p = make_pair(BigReal(p.a, work), BigReal(p.b, work), w.dof);
    d.pairing.jitter = BigReal(d.pairing.jitter, work);
    if (d.pairing.leftover) d.pairing.leftover = BigReal(*d.pairing.leftover, work);
    d.x_max = BigReal(d.x_max, work);
    d.C = BigReal(1, work);
    d.slack = BigReal::zero(work);
    d.jitter_bound = BigReal::zero(work);
  }

  std::vector<ExpPolySum> lower_factors, upper_factors;
  for (const auto& g : d.pairing.gammas) {
    auto f = gamma_factor_sum(g, cap);
    d.C *= f.blocks().front().coeffs.back();
    lower_factors.push_back(f);
    upper_factors.push_back(std::move(f));
  }
  BigReal max_rate = BigReal::zero(d.C.precision());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairSpec& p = pairs[i];
    const unsigned m = d.plan.orders[i];
    d.C *= p.constant;
    max_rate = max(max_rate, abs(p.rate));
    lower_factors.push_back(pair_factor_sum(p, m, d.x_max, false, cap));
    upper_factors.push_back(pair_factor_sum(p, m, d.x_max, true, cap));
  }
  if (!d.pairing.jitter.is_zero()) d.jitter_bound = d.pairing.jitter * (1 + d.x_max * max_rate);

  auto fold = [](const std::vector<ExpPolySum>& factors) {
    ExpPolySum acc = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) acc = convolve_sums(acc, factors[i]);
    return acc;
  };
  if (!lower_factors.empty()) {
    d.lower = fold(lower_factors);
    d.upper = fold(upper_factors);
    if (options.prune) {
      auto pl = prune(d.lower, d.x_max);
      auto pu = prune(d.upper, d.x_max);
      d.lower = std::move(pl.sum);
      d.upper = std::move(pu.sum);
      d.slack = pl.slack + pu.slack;
    }
  }
  return d;
}

Bounds pdf_bounds(const CertifiedDensity& d, const BigReal& x) {
  check_range(d, x, "pdf");
  const PrecisionBits bits = d.C.precision();
  const BigReal xb(x, bits);
  Bounds out{BigReal::zero(bits), BigReal::zero(bits), BigReal::zero(bits), 0};
  const bool symbolic = !d.lower.empty();
  if (!d.pairing.leftover) {
    const auto lo = evaluate_with_magnitude(d.lower, xb);
    const auto hi = evaluate_with_magnitude(d.upper, xb);
    out.cancellation_bits = std::max(cancellation(lo), cancellation(hi));
    finish(d, lo.value - d.slack - rounding(lo.abs_sum), hi.value + d.slack + rounding(hi.abs_sum), out);
    return out;
  }
  const BigReal& c = *d.pairing.leftover;
  if (!symbolic) {
    const BigReal v = single_weight_pdf(c, d.dof, xb);
    finish(d, v, v, out);
    return out;
  }
  if (xb.is_zero()) return out;
  const LeftoverKernel kernel(c, d.dof);
  const BigReal root = sqrt(xb);
  const BigReal zero = BigReal::zero(bits);
  // Rounding in the symbolic sums is relative to their absolute-value sums.
  BigReal scale = zero;
  auto run = [&](int n) {
    std::pair<BigReal, BigReal> acc{zero, zero};
    const auto& rule = gauss_legendre_rule(n, bits);
    const BigReal half = root / 2;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const BigReal wv = half + half * rule.nodes[i];
      const BigReal y = max(zero, xb - wv * wv);
      const BigReal k = kernel(wv) * rule.weights[i] * half;
      const auto lo = evaluate_with_magnitude(d.lower, y);
      const auto hi = evaluate_with_magnitude(d.upper, y);
      scale += abs(k) * max(lo.abs_sum, hi.abs_sum);
      acc.first += k * (lo.value - d.slack);
      acc.second += k * (hi.value + d.slack);
    }
    return acc;
  };
  const auto coarse = run(d.leftover_nodes);
  scale = zero;
  const auto fine = run(2 * d.leftover_nodes);
  out.cancellation_bits = cancellation({fine.first, scale});
  out.uncertified = max(abs(fine.first - coarse.first), abs(fine.second - coarse.second));
  finish(d, fine.first - rounding(scale), fine.second + rounding(scale), out);
  return out;
}

Bounds cdf_bounds(const CertifiedDensity& d, const BigReal& t) {
  check_range(d, t, "cdf");
  const PrecisionBits bits = d.C.precision();
  const BigReal tb(t, bits);
  Bounds out{BigReal::zero(bits), BigReal::zero(bits), BigReal::zero(bits), 0};
  if (tb.is_zero()) return out;
  const bool symbolic = !d.lower.empty();
  if (!d.pairing.leftover) {
    const auto lo = integrate_with_magnitude(d.lower, tb);
    const auto hi = integrate_with_magnitude(d.upper, tb);
    out.cancellation_bits = std::max(cancellation(lo), cancellation(hi));
    finish(d, lo.value - d.slack * tb - rounding(lo.abs_sum), hi.value + d.slack * tb + rounding(hi.abs_sum), out);
    return out;
  }
  const BigReal& c = *d.pairing.leftover;
  if (!symbolic) {
    const BigReal v = regularized_lower_gamma(BigReal(static_cast<long>(d.dof), bits) / 2, tb / (2 * c));
    finish(d, v, v, out);
    return out;
  }
  const LeftoverKernel kernel(c, d.dof);
  const BigReal root = sqrt(tb);
  const BigReal zero = BigReal::zero(bits);
  // Rounding in the symbolic sums is relative to their absolute-value sums.
  BigReal scale = zero;
  auto run = [&](int n) {
    std::pair<BigReal, BigReal> acc{zero, zero};
    const auto& rule = gauss_legendre_rule(n, bits);
    const BigReal half = root / 2;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const BigReal wv = half + half * rule.nodes[i];
      const BigReal y = max(zero, tb - wv * wv);
      const BigReal k = kernel(wv) * rule.weights[i] * half;
      const auto lo = integrate_with_magnitude(d.lower, y);
      const auto hi = integrate_with_magnitude(d.upper, y);
      scale += abs(k) * max(lo.abs_sum, hi.abs_sum);
      acc.first += k * (lo.value - d.slack * y);
      acc.second += k * (hi.value + d.slack * y);
    }
    return acc;
  };
  const auto coarse = run(d.leftover_nodes);
  scale = zero;
  const auto fine = run(2 * d.leftover_nodes);
  out.cancellation_bits = cancellation({fine.first, scale});
  out.uncertified = max(abs(fine.first - coarse.first), abs(fine.second - coarse.second));
  finish(d, fine.first - rounding(scale), fine.second + rounding(scale), out);
  return out;
}

double sampled_mass(const SampledDensity& f) {
  const std::size_t n = f.values.size();
  if (n < 2) return 0;
  auto simpson = [&](std::size_t lo, std::size_t hi) {  // hi - lo even
    double s = f.values[lo] + f.values[hi];
    for (std::size_t k = lo + 1; k < hi; ++k) s += (k - lo) % 2 == 1 ? 4 * f.values[k] : 2 * f.values[k];
    return s * f.step / 3;
  };
  if (n % 2 == 1) return simpson(0, n - 1);
  if (n == 2) return 0.5 * f.step * (f.values[0] + f.values[1]);
  // Simpson on all but the last interval, trapezoid on that one.
  return simpson(0, n - 2) + 0.5 * f.step * (f.values[n - 2] + f.values[n - 1]);
}

namespace {

// Weight of sample p (0-based) in a composite rule over count equally spaced samples.
double simpson_weight(std::size_t p, std::size_t count) {
  if (count == 1) return 0;
  if (count == 2) return 0.5;
  if (count % 2 == 1) {
    if (p == 0 || p == count - 1) return 1.0 / 3;
    return p % 2 == 1 ? 4.0 / 3 : 2.0 / 3;
  }
  // Simpson on the first count - 3 intervals' worth, 3/8 rule on the last three.
  const std::size_t split = count - 4;
  double w = 0;
  if (p <= split && split > 0) {
    if (p == 0 || p == split)
      w += 1.0 / 3;
    else
      w += p % 2 == 1 ? 4.0 / 3 : 2.0 / 3;
  }
  if (p >= split) {
    const std::size_t q = p - split;
    w += (q == 0 || q == 3) ? 3.0 / 8 : 9.0 / 8;
  }
  return w;
}

}  // namespace

SampledDensity numeric_convolve(const SampledDensity& f, const SampledDensity& g) {
  if (!(f.step > 0) || std::fabs(f.step - g.step) > 1e-12 * f.step)
    throw GridMismatch("numeric_convolve needs equal positive grid steps, got " + std::to_string(f.step) + " and " +
                       std::to_string(g.step));
  if (f.values.empty() || g.values.empty()) throw GridMismatch("numeric_convolve needs nonempty grids");
  const std::size_t nf = f.values.size();
  const std::size_t ng = g.values.size();
  SampledDensity out{f.origin + g.origin, f.step, std::vector<double>(nf + ng - 1, 0.0)};
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const std::size_t lo = k >= ng - 1 ? k - (ng - 1) : 0;
    const std::size_t hi = std::min(k, nf - 1);
    const std::size_t count = hi - lo + 1;
    double s = 0;
    for (std::size_t j = lo; j <= hi; ++j) s += simpson_weight(j - lo, count) * f.values[j] * g.values[k - j];
    out.values[k] = s * f.step;
  }
  const double target = sampled_mass(f) * sampled_mass(g);
  const double mass = sampled_mass(out);
  if (mass > 0 && target > 0)
    for (auto& v : out.values) v *= target / mass;
  return out;
}

}  // namespace chisum
