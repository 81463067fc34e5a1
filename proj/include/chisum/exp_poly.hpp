#pragma once

// The algebra of finite sums of c * e^{b x} * x^k on [0, inf), closed under the
// one-sided convolution (f * g)(x) = int_0^x f(t) g(x - t) dt for distinct rates.

#include <cstddef>
#include <vector>

#include "chisum/big_real.hpp"

namespace chisum {

inline constexpr unsigned kDefaultDegreeCap = 512;

/// coeff * e^{rate x} * x^power
struct Term {
  BigReal coeff;
  BigReal rate;
  unsigned power = 0;
};

class ExpPolySum {
 public:
  /// All terms sharing one rate; coeffs[k] multiplies x^k.
  struct Block {
    BigReal rate;
    std::vector<BigReal> coeffs;
  };

  explicit ExpPolySum(unsigned degree_cap = kDefaultDegreeCap);
  static ExpPolySum from_terms(const std::vector<Term>& terms, unsigned degree_cap = kDefaultDegreeCap);
  /// One block; trailing zero coefficients are trimmed.
  static ExpPolySum from_block(BigReal rate, std::vector<BigReal> coeffs, unsigned degree_cap = kDefaultDegreeCap);

  /// Adds a term, merging with an existing (rate, power). Throws DomainError
  /// when power >= degree_cap.
  void add(const Term& t);
  /// Adds a whole block at one rate.
  void add_block(const BigReal& rate, const std::vector<BigReal>& coeffs);

  /// Blocks sorted by rate, descending.
  const std::vector<Block>& blocks() const { return blocks_; }
  /// Nonzero terms, rate descending then power ascending.
  std::vector<Term> terms() const;

  unsigned degree_cap() const { return degree_cap_; }
  std::size_t rate_count() const { return blocks_.size(); }
  std::size_t term_count() const;
  /// Highest power present, 0 for an empty sum.
  unsigned max_power() const;
  bool empty() const { return blocks_.empty(); }
  PrecisionBits precision() const;

  ExpPolySum scaled(const BigReal& factor) const;

 private:
  std::size_t find_or_insert(const BigReal& rate);
  void trim();

  unsigned degree_cap_;
  std::vector<Block> blocks_;
};

/// Exact convolution of two single terms with distinct rates, through the
/// finite form of 1F1(n+1; n+m+2; (a-b) x). Throws EqualRates.
ExpPolySum convolve_terms(const Term& f, const Term& g, unsigned degree_cap = kDefaultDegreeCap);

/// Bilinear convolution of two sums with pairwise distinct rates, computed by
/// partial fractions of the Laplace transforms block by block. The result
/// keeps the union of the rates; a block's degree never grows.
ExpPolySum convolve_sums(const ExpPolySum& f, const ExpPolySum& g);

/// A value together with sum |c e^{b x} x^k|, the scale against which its
/// cancellation is measured.
struct Magnitude {
  BigReal value;
  BigReal abs_sum;
};

BigReal evaluate(const ExpPolySum& f, const BigReal& x);
Magnitude evaluate_with_magnitude(const ExpPolySum& f, const BigReal& x);

/// int_0^t f(x) dx; t may be +inf when every rate is negative.
BigReal integrate(const ExpPolySum& f, const BigReal& t);
Magnitude integrate_with_magnitude(const ExpPolySum& f, const BigReal& t);

/// sup over [0, x_max] of |e^{rate x} x^k|.
BigReal term_sup(const BigReal& rate, unsigned power, const BigReal& x_max);

struct PruneResult {
  ExpPolySum sum;
  BigReal slack;  // sum of sup-norms of the dropped terms on [0, x_max]
  std::size_t dropped = 0;
};

/// Drops terms whose sup-norm on [0, x_max] is below 2^{-precision} times the
/// largest term's sup-norm.
PruneResult prune(const ExpPolySum& f, const BigReal& x_max);

}  // namespace chisum
