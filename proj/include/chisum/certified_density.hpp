#pragma once

// Certified two-sided bounds on the density and CDF of Z = sum_i w_i X_i with
// X_i iid chi-square(r). Adjacent weights are paired; each pair's density is
// K z^nu e^{rate z} I_nu(s z), whose Bessel factor is replaced by its Taylor
// polynomial (lower) and the polynomial plus a Lagrange remainder term (upper).
// The factors are convolved exactly in the exp-polynomial algebra.

#include <optional>
#include <vector>

#include "chisum/big_real.hpp"
#include "chisum/exp_poly.hpp"

namespace chisum {

struct WeightList {
  std::vector<BigReal> weights;  // ascending, positive
  unsigned dof = 1;
};

/// Validates, converts to the requested precision and sorts. Throws DomainError
/// on nonpositive or non-finite weights, an empty list or dof == 0.
WeightList make_weight_list(const std::vector<BigReal>& weights, unsigned dof = 1,
                            PrecisionBits bits = default_precision());
WeightList make_weight_list(const std::vector<double>& weights, unsigned dof = 1,
                            PrecisionBits bits = default_precision());

struct PairSpec {
  BigReal a;
  BigReal b;
  unsigned nu = 0;
  BigReal rate;          // -(a + b) / (4ab)
  BigReal bessel_scale;  // (b - a) / (4ab)
  BigReal constant;      // K = (4ab)^{-r/2} nu! / (r-1)! (s/2)^{-nu}
};

PairSpec make_pair(const BigReal& a, const BigReal& b, unsigned dof);

/// weight * chi-square(2 shape): x^{shape-1} e^{-x/(2w)} / ((shape-1)! (2w)^shape).
struct GammaFactor {
  BigReal weight;
  unsigned shape = 1;
};

struct Pairing {
  std::vector<PairSpec> pairs;
  std::vector<GammaFactor> gammas;
  std::optional<BigReal> leftover;
  /// Largest relative perturbation applied to a weight to separate colliding rates.
  BigReal jitter;
};

/// Runs of equal weights become exact gamma factors (two chi-square(r) of the
/// same weight are one chi-square(2r)); remaining single weights are paired in
/// ascending order and an odd one out (the largest) is returned as leftover.
/// For even r every weight is already an exact gamma factor.
Pairing pair_weights(const WeightList& w);

/// Exact density of aX + bY, X, Y ~ chi-square(r); 0 for x < 0.
BigReal pair_density_exact(const PairSpec& p, const BigReal& x);

/// Smallest m (stepping by 2 from nu) such that the integral over [0, x_max] of
/// e^{rate y} T_m(I_nu(s .))(y) reaches (1 - budget) times that of e^{rate y} I_nu(s y).
unsigned select_order(const PairSpec& p, const BigReal& x_max, const BigReal& budget,
                      unsigned degree_cap = kDefaultDegreeCap);

/// Relative pointwise width of one pair's envelope on [0, x_max] at order m:
/// (upper - lower) / lower <= envelope_ratio.
BigReal envelope_ratio(const PairSpec& p, unsigned m, const BigReal& x_max);

struct OrderPlan {
  std::vector<unsigned> orders;
  BigReal budget_per_pair;
  BigReal x_max;
};

struct CertifiedDensity {
  ExpPolySum lower;
  ExpPolySum upper;
  /// Product of the factor constants; already folded into lower and upper.
  BigReal C;
  BigReal x_max;
  BigReal R_max;
  OrderPlan plan;
  BigReal slack;
  /// Relative widening that covers the jitter applied to colliding rates.
  BigReal jitter_bound;
  unsigned dof = 1;
  Pairing pairing;
  /// Gauss-Legendre nodes for the leftover weight's convolution; the value
  /// uses twice as many and the difference is the uncertified error.
  int leftover_nodes = 32;
};

struct BuildOptions {
  unsigned degree_cap = kDefaultDegreeCap;
  /// Fixed per-pair orders instead of the budget-driven choice.
  std::optional<std::vector<unsigned>> orders;
  bool prune = true;
};

CertifiedDensity build(const WeightList& w, const BigReal& x_max, const BigReal& R_max,
                       const BuildOptions& options = {});

struct Bounds {
  BigReal lo;
  BigReal hi;
  /// Heuristic error of the leftover quadrature, not covered by [lo, hi].
  BigReal uncertified;
  /// log2 of the cancellation in the symbolic sums (0 when none).
  double cancellation_bits = 0;
};

Bounds pdf_bounds(const CertifiedDensity& d, const BigReal& x);
/// Bounds on P(Z <= t).
Bounds cdf_bounds(const CertifiedDensity& d, const BigReal& t);

/// Checks once per process that the pair constant integrates to one.
void verify_pair_normalization();

/// A density sampled at origin + k * step.
struct SampledDensity {
  double origin = 0;
  double step = 0;
  std::vector<double> values;

  double at(std::size_t k) const { return values[k]; }
  double x(std::size_t k) const { return origin + static_cast<double>(k) * step; }
};

/// Simpson-rule integral of a sampled density.
double sampled_mass(const SampledDensity& f);

/// Discrete convolution with Simpson weights; the result starts at
/// f.origin + g.origin and is rescaled to mass(f) * mass(g). Throws
/// GridMismatch when the steps differ.
SampledDensity numeric_convolve(const SampledDensity& f, const SampledDensity& g);

}  // namespace chisum
