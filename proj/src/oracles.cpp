#include "chisum/oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include "chisum/errors.hpp"
#include "chisum/quadrature.hpp"
#include "chisum/random.hpp"
#include "chisum/special_functions.hpp"

namespace chisum {

BigReal gamma_sum_density(const BigReal& alpha1, const BigReal& beta1, const BigReal& alpha2, const BigReal& beta2,
                          const BigReal& z) {
  const PrecisionBits bits = std::max({alpha1.precision(), beta1.precision(), alpha2.precision(),
                                       beta2.precision(), z.precision()});
  if (z < 0.0) return BigReal::zero(bits);
  const BigReal shape = alpha1 + alpha2;
  if (z.is_zero()) {
    if (shape < 1.0) return BigReal::infinity(1, bits);
    if (shape > 1.0) return BigReal::zero(bits);
  }
  const BigReal pre = pow(beta1, alpha1) * pow(beta2, alpha2) / gamma(shape);
  const BigReal power = shape == 1.0 ? BigReal(1, bits) : pow(z, shape - 1);
  return pre * power * exp(-beta2 * z) * kummer_1f1(alpha1, shape, (beta2 - beta1) * z).value;
}

BigReal appendix_three_term(const BigReal& a, const BigReal& b, const BigReal& x) {
  if (!(b > a) || !(a > 0.0)) throw DomainError("appendix_three_term needs b > a > 0");
  const PrecisionBits bits = std::max({a.precision(), b.precision(), x.precision()});
  if (x <= 0.0) return BigReal::zero(bits);
  // sqrt(1/(4 a^2 b)) sqrt(ab/(b-a)) e^{-x/(2a)} erfi(sqrt((b-a) x / (2ab)))
  const BigReal c = 1 / (2 * sqrt(a * (b - a)));
  return c * exp(-x / (2 * a)) * erfi(sqrt((b - a) * x / (2 * a * b)));
}

BigReal appendix_four_term(const BigReal& a, const BigReal& b, const BigReal& x) {
  if (!(b > a) || !(a > 0.0)) throw DomainError("appendix_four_term needs b > a > 0");
  const PrecisionBits bits = std::max({a.precision(), b.precision(), x.precision()});
  if (x <= 0.0) return BigReal::zero(bits);
  // x / (4 sqrt(a^3 b)) e^{-(a+b)x/(4ab)} (I0(y) - I1(y)), y = (b-a) x / (4ab)
  const BigReal four_ab = 4 * a * b;
  const BigReal y = (b - a) * x / four_ab;
  return x / (4 * sqrt(a * a * a * b)) * exp(-(a + b) * x / four_ab) *
         (bessel_i(0, y).value - bessel_i(1, y).value);
}

McEstimate mc_mean(const std::function<double(CounterRng&)>& sample, long samples, std::uint64_t seed,
                   unsigned threads) {
  if (samples < kMcMinSamples) throw DomainError("Monte Carlo needs at least 10^4 samples");
  const long streams = (samples + kMcChunk - 1) / kMcChunk;
  std::vector<long double> sums(static_cast<std::size_t>(streams)), squares(static_cast<std::size_t>(streams));
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long s = next++; s < streams; s = next++) {
      CounterRng rng(seed, static_cast<std::uint64_t>(s));
      const long count = std::min(kMcChunk, samples - s * kMcChunk);
      long double sum = 0, sq = 0;
      for (long i = 0; i < count; ++i) {
        const long double v = sample(rng);
        sum += v;
        sq += v * v;
      }
      sums[static_cast<std::size_t>(s)] = sum;
      squares[static_cast<std::size_t>(s)] = sq;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, streams));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  long double sum = 0, sq = 0;
  for (long s = 0; s < streams; ++s) {
    sum += sums[static_cast<std::size_t>(s)];
    sq += squares[static_cast<std::size_t>(s)];
  }
  const long double n = static_cast<long double>(samples);
  const long double mean = sum / n;
  const long double var = std::max<long double>(0, (sq - n * mean * mean) / (n - 1));
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / n)), samples};
}

namespace {

double chi_square_draw(CounterRng& rng, unsigned dof) {
  double s = 0;
  for (unsigned k = 0; k < dof; ++k) {
    const double z = rng.normal();
    s += z * z;
  }
  return s;
}

double weighted_draw(CounterRng& rng, const std::vector<double>& w, unsigned dof) {
  double s = 0;
  for (double wi : w) s += wi * chi_square_draw(rng, dof);
  return s;
}

}  // namespace

McEstimate mc_tail(const std::vector<double>& w, unsigned dof, double t, long samples, std::uint64_t seed,
                   unsigned threads) {
  return mc_mean([&](CounterRng& rng) { return weighted_draw(rng, w, dof) <= t ? 1.0 : 0.0; }, samples, seed,
                 threads);
}

McEstimate mc_density(const std::vector<double>& w, unsigned dof, double x, double bandwidth, long samples,
                      std::uint64_t seed, unsigned threads) {
  const double norm = 1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
  return mc_mean(
      [&](CounterRng& rng) {
        const double u = (x - weighted_draw(rng, w, dof)) / bandwidth;
        return norm * std::exp(-0.5 * u * u);
      },
      samples, seed, threads);
}

namespace {

using Density = std::function<long double(long double)>;

long double adaptive(const std::function<long double(long double)>& f, long double a, long double b) {
  if (!(b > a)) return 0;
  const long double coarse = gauss_legendre<long double>(f, a, b, 20);
  const long double tol = std::max<long double>(std::fabs(coarse), 1e-300L) * 1e-16L;
  return integrate_adaptive<long double>(f, a, b, tol, 20).value;
}

Density gamma_leaf(long double w, long double shape) {
  const long double log_norm = -std::lgamma(shape) - shape * std::log(2 * w);
  return [=](long double x) -> long double {
    if (x < 0) return 0;
    if (x == 0) return shape == 1 ? std::exp(log_norm) : (shape > 1 ? 0 : INFINITY);
    return std::exp(log_norm + (shape - 1) * std::log(x) - x / (2 * w));
  };
}

// aX + bY for X, Y ~ chi-square(r), r odd, a < b.
Density bessel_leaf(long double a, long double b, unsigned r) {
  const long double nu = (r - 1) / 2.0L;
  const long double four_ab = 4 * a * b;
  const long double rate = -(a + b) / four_ab;
  const long double s = (b - a) / four_ab;
  const long double log_k =
      -0.5L * r * std::log(four_ab) + std::lgamma(nu + 1) - std::lgamma(static_cast<long double>(r)) - nu * std::log(s / 2);
  return [=](long double x) -> long double {
    if (x < 0) return 0;
    if (x == 0) return nu == 0 ? std::exp(log_k) : 0;
    return std::exp(log_k + nu * std::log(x) + rate * x) * std::cyl_bessel_il(nu, s * x);
  };
}

Density convolve(Density f, Density g) {
  return [f, g](long double x) -> long double {
    if (x <= 0) return 0;
    return adaptive([&](long double u) { return f(u) * g(x - u); }, 0, x);
  };
}

// f convolved with c * chi-square(r), through u = w^2.
Density convolve_single(Density f, long double c, unsigned r) {
  const long double half_r = r / 2.0L;
  const long double log_norm = std::log(2.0L) - half_r * std::log(2 * c) - std::lgamma(half_r);
  return [=](long double x) -> long double {
    if (x <= 0) return 0;
    return adaptive(
        [&](long double w) {
          return std::exp(log_norm - w * w / (2 * c) + (r - 1) * std::log(w)) * f(x - w * w);
        },
        0, std::sqrt(x));
  };
}

}  // namespace

long double quad_convolve_density(const std::vector<long double>& weights, unsigned dof, long double x) {
  if (weights.empty() || weights.size() > 8) throw DomainError("quad_convolve_density supports 1 to 8 weights");
  if (dof == 0) throw DomainError("degrees of freedom must be positive");
  std::vector<long double> w = weights;
  std::sort(w.begin(), w.end());
  if (w.front() <= 0) throw DomainError("weights must be positive");
  if (x < 0) return 0;
  if (x == 0 && w.size() > 1) {
    // Sum of gammas with total shape n r / 2: the density at 0 is 0 above
    // shape 1, infinite below, and prod (2 w_i)^{-r/2} at exactly 1.
    const unsigned total = static_cast<unsigned>(w.size()) * dof;
    if (total > 2) return 0;
    long double v = 1;
    for (long double wi : w) v /= std::pow(2 * wi, dof / 2.0L);
    return total == 2 ? v : std::numeric_limits<long double>::infinity();
  }

  std::vector<Density> leaves;
  std::optional<long double> single;
  if (dof % 2 == 0) {
    for (long double wi : w) leaves.push_back(gamma_leaf(wi, dof / 2.0L));
  } else {
    std::size_t i = 0;
    for (; i + 1 < w.size(); i += 2) {
      if (w[i] == w[i + 1])
        leaves.push_back(gamma_leaf(w[i], static_cast<long double>(dof)));
      else
        leaves.push_back(bessel_leaf(w[i], w[i + 1], dof));
    }
    if (i < w.size()) single = w[i];
  }
  if (leaves.empty()) return gamma_leaf(*single, dof / 2.0L)(x);
  while (leaves.size() > 1) {
    std::vector<Density> next;
    for (std::size_t i = 0; i + 1 < leaves.size(); i += 2) next.push_back(convolve(leaves[i], leaves[i + 1]));
    if (leaves.size() % 2 == 1) next.push_back(leaves.back());
    leaves = std::move(next);
  }
  Density total = single ? convolve_single(leaves.front(), *single, dof) : leaves.front();
  return total(x);
}

BigReal quad_convolve_density(const WeightList& w, const BigReal& x) {
  std::vector<long double> ws;
  for (const auto& v : w.weights) ws.push_back(v.to_long_double());
  BigReal out = BigReal::zero(x.precision());
  mpfr_set_ld(out.raw(), quad_convolve_density(ws, w.dof, x.to_long_double()), MPFR_RNDN);
  return out;
}

}  // namespace chisum
