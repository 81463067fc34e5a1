#pragma once

// Independent reference values: closed forms, Monte Carlo and brute-force
// quadrature of the convolution integrals.

#include <cstdint>
#include <functional>
#include <vector>

#include "chisum/big_real.hpp"
#include "chisum/certified_density.hpp"

namespace chisum {

struct McEstimate {
  double value = 0;
  double std_error = 0;
  long samples = 0;
};

inline constexpr long kMcMinSamples = 10'000;
/// Samples per independent stream; streams are the unit of parallel work.
inline constexpr long kMcChunk = 1L << 16;

/// Density of X1 + X2, Xi ~ Gamma(alpha_i, rate beta_i):
/// b1^a1 b2^a2 / Gamma(a1 + a2) z^{a1+a2-1} e^{-b2 z} 1F1(a1; a1 + a2; (b2 - b1) z).
BigReal gamma_sum_density(const BigReal& alpha1, const BigReal& beta1, const BigReal& alpha2, const BigReal& beta2,
                          const BigReal& z);

/// Density of aX + aY + bZ with X, Y, Z iid chi-square(1), b > a > 0.
BigReal appendix_three_term(const BigReal& a, const BigReal& b, const BigReal& x);

/// Density of aX + aY + aZ + bW with X, Y, Z, W iid chi-square(1), b > a > 0.
BigReal appendix_four_term(const BigReal& a, const BigReal& b, const BigReal& x);

class CounterRng;

/// Mean of sample(rng) over `samples` draws, split into streams of kMcChunk
/// draws; stream i uses CounterRng(seed, i). Streams run on `threads` workers
/// (0 = hardware concurrency) and are reduced in stream order, so the result
/// does not depend on the thread count. std_error = sample std / sqrt(samples).
McEstimate mc_mean(const std::function<double(CounterRng&)>& sample, long samples, std::uint64_t seed,
                   unsigned threads = 0);

/// P(sum w_i X_i <= t), X_i iid chi-square(dof); binomial standard error.
McEstimate mc_tail(const std::vector<double>& w, unsigned dof, double t, long samples, std::uint64_t seed,
                   unsigned threads = 0);

/// Gaussian-kernel density estimate of sum w_i X_i at x with the given bandwidth.
McEstimate mc_density(const std::vector<double>& w, unsigned dof, double x, double bandwidth, long samples,
                      std::uint64_t seed, unsigned threads = 0);

/// Density of sum w_i X_i at x by nested adaptive quadrature of the convolution
/// integrals in long double (at most 8 weights).
BigReal quad_convolve_density(const WeightList& w, const BigReal& x);
long double quad_convolve_density(const std::vector<long double>& w, unsigned dof, long double x);

}  // namespace chisum
