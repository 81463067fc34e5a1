#include <gtest/gtest.h>

#include <cmath>

#include "chisum/certified_density.hpp"
#include "chisum/errors.hpp"
#include "chisum/oracles.hpp"
#include "chisum/serialization.hpp"
#include "chisum/special_functions.hpp"
#include "chisum/vacua.hpp"
#include "test_support.hpp"

using namespace chisum;
using testing_support::Gen;
using testing_support::Ref;
using testing_support::quad;
using testing_support::rel_diff;
using testing_support::to_ref;
using testing_support::two_weight_pdf;

namespace {

constexpr PrecisionBits kBits = 256;

BigReal big(double v) { return BigReal(v, kBits); }

CertifiedDensity build_d(const std::vector<double>& w, double x_max, double R_max, unsigned dof = 1,
                         const BuildOptions& opt = {}) {
  return build(make_weight_list(w, dof, kBits), big(x_max), big(R_max), opt);
}

// Count of abscissae where the quadrature oracle leaves [lo, hi]. The oracle
// is accurate to 1e-15 of the peak density, which widens the check.
int sandwich_violations(const CertifiedDensity& d, const std::vector<double>& w, unsigned dof, int points) {
  const double x_max = d.x_max.to_double();
  std::vector<long double> wl(w.begin(), w.end());
  std::vector<double> xs;
  std::vector<long double> oracle;
  long double peak = 0;
  for (int i = 0; i < points; ++i) {
    xs.push_back(x_max * (i + 0.5) / points);
    oracle.push_back(quad_convolve_density(wl, dof, xs.back()));
    peak = std::max(peak, oracle.back());
  }
  const BigReal tol(static_cast<double>(1e-15L * peak), kBits);
  int bad = 0;
  for (int i = 0; i < points; ++i) {
    const Bounds b = pdf_bounds(d, big(xs[i]));
    const BigReal o(oracle[i], kBits);
    if (o < b.lo - b.uncertified - tol || o > b.hi + b.uncertified + tol) {
      ++bad;
      ADD_FAILURE() << "x=" << xs[i] << " lo=" << b.lo.to_double() << " oracle=" << static_cast<double>(oracle[i])
                    << " hi=" << b.hi.to_double();
    }
  }
  return bad;
}

}  // namespace

TEST(PairWeights, Examples) {
  const Pairing p4 = pair_weights(make_weight_list(std::vector<double>{4, 2, 3, 1}, 1, kBits));
  ASSERT_EQ(p4.pairs.size(), 2u);
  EXPECT_EQ(p4.pairs[0].a, 1.0);
  EXPECT_EQ(p4.pairs[0].b, 2.0);
  EXPECT_EQ(p4.pairs[1].a, 3.0);
  EXPECT_EQ(p4.pairs[1].b, 4.0);
  EXPECT_FALSE(p4.leftover.has_value());
  EXPECT_TRUE(p4.gammas.empty());

  const Pairing p3 = pair_weights(make_weight_list(std::vector<double>{1, 2, 3}, 1, kBits));
  ASSERT_EQ(p3.pairs.size(), 1u);
  EXPECT_EQ(p3.pairs[0].a, 1.0);
  EXPECT_EQ(p3.pairs[0].b, 2.0);
  ASSERT_TRUE(p3.leftover.has_value());
  EXPECT_EQ(*p3.leftover, 3.0);

  const Pairing p2 = pair_weights(make_weight_list(std::vector<double>{2, 2}, 1, kBits));
  EXPECT_TRUE(p2.pairs.empty());
  ASSERT_EQ(p2.gammas.size(), 1u);
  EXPECT_EQ(p2.gammas[0].weight, 2.0);
  EXPECT_EQ(p2.gammas[0].shape, 1u);
}

TEST(PairWeights, NonpositiveWeightsAreRejected) {
  EXPECT_THROW(make_weight_list(std::vector<double>{1, -2}), DomainError);
  EXPECT_THROW(make_weight_list(std::vector<double>{0, 2}), DomainError);
  EXPECT_THROW(make_weight_list(std::vector<double>{}), DomainError);
}

TEST(Build, MergedEqualPairIsTheExactExponential) {
  // 2X + 2Y with X, Y ~ chi-square(1) is 4 * chi-square(2)/2: density e^{-x/4}/4.
  const CertifiedDensity d = build_d({2, 2}, 10, 0.05);
  for (double x : {0.0, 0.5, 3.0, 9.5}) {
    const Bounds b = pdf_bounds(d, big(x));
    const Ref oracle = exp(-Ref(x) / 4) / 4;
    EXPECT_LT(rel_diff(b.lo, oracle), 1e-45) << x;
    EXPECT_LT(rel_diff(b.hi, oracle), 1e-45) << x;
  }
}

TEST(PairDensityExact, Examples) {
  const PairSpec p = make_pair(big(1), big(2), 1);
  EXPECT_LT(rel_diff(pair_density_exact(p, big(0)), 1 / sqrt(Ref(8))), 1e-45);
  EXPECT_EQ(pair_density_exact(p, big(-0.1)), 0.0);
  const PairSpec q = make_pair(big(1), big(3), 1);
  const Ref total = boost::math::quadrature::tanh_sinh<Ref>().integrate(
      [&](const Ref& x) { return to_ref(pair_density_exact(q, testing_support::from_ref(x, kBits))); }, Ref(0),
      Ref(1000));
  EXPECT_LT(static_cast<double>(abs(total - 1)), 1e-30);
}

TEST(PairDensityExact, MatchesDirectConvolution) {
  Gen gen(59);
  for (int i = 0; i < 10; ++i) {
    const auto w = gen.distinct_weights(2, 0.2, 5);
    const double a = std::min(w[0], w[1]), b = std::max(w[0], w[1]);
    const double x = gen.uniform(0.01, 10);
    const PairSpec p = make_pair(big(a), big(b), 1);
    EXPECT_LT(rel_diff(pair_density_exact(p, big(x)), two_weight_pdf(Ref(a), Ref(b), Ref(x))), 1e-40);
  }
}

TEST(PairDensityExact, OddDofPairsIntegrateToOne) {
  verify_pair_normalization();
  for (unsigned r : {3u, 5u}) {
    const PairSpec p = make_pair(big(0.5), big(1.5), r);
    const Ref total = boost::math::quadrature::tanh_sinh<Ref>().integrate(
        [&](const Ref& x) { return to_ref(pair_density_exact(p, testing_support::from_ref(x, kBits))); }, Ref(0),
        Ref(400));
    EXPECT_LT(static_cast<double>(abs(total - 1)), 1e-30) << r;
  }
}

TEST(SelectOrder, ZeroBesselArgumentNeedsOrderZero) {
  PairSpec p = make_pair(big(1), big(2), 1);
  p.bessel_scale = big(0);
  EXPECT_EQ(select_order(p, big(1), big(1e-6)), 0u);
}

TEST(SelectOrder, MatchesBruteForceScan) {
  const PairSpec p = make_pair(big(1), big(2), 1);
  const double rate = p.rate.to_double(), s = p.bessel_scale.to_double();
  const Ref full = quad([&](const Ref& y) { return exp(Ref(rate) * y) * boost::math::cyl_bessel_i(0, Ref(s) * y); },
                        Ref(0), Ref(1));
  unsigned brute = 0;
  for (;; brute += 2) {
    const unsigned m = brute;
    auto taylor = [&](const Ref& y) {
      Ref sum = 0, term = 1;
      const Ref q = (Ref(s) * y / 2) * (Ref(s) * y / 2);
      for (unsigned k = 0; 2 * k <= m; ++k) {
        sum += term;
        term *= q / ((k + 1) * (k + 1));
      }
      return exp(Ref(rate) * y) * sum;
    };
    if (quad(taylor, Ref(0), Ref(1)) >= (1 - Ref(1e-6)) * full) break;
  }
  EXPECT_EQ(select_order(p, big(1), big(1e-6)), brute);
}

TEST(SelectOrder, ShrinkingBudgetNeverLowersOrder) {
  Gen gen(61);
  for (int i = 0; i < 10; ++i) {
    const auto w = gen.distinct_weights(2, 0.05, 5);
    const PairSpec p = make_pair(big(std::min(w[0], w[1])), big(std::max(w[0], w[1])), 1);
    const BigReal x_max = big(gen.uniform(0.5, 20));
    unsigned prev = 0;
    for (double budget = 0.5; budget > 1e-30; budget /= 10) {
      const unsigned m = select_order(p, x_max, big(budget));
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(SelectOrder, UnreachableBudgetThrows) {
  const PairSpec p = make_pair(big(0.5), big(4), 1);
  EXPECT_THROW(select_order(p, big(60), big(1e-30), 8), BudgetUnreachable);
}

TEST(Build, TwoWeightsSandwichExactDensity) {
  for (double R : {0.05, 1e-4, 1e-10}) {
    const CertifiedDensity d = build_d({1, 2}, 8, R);
    const PairSpec p = make_pair(big(1), big(2), 1);
    for (int i = 0; i < 20; ++i) {
      const BigReal x = big(8.0 * i / 19);
      const Bounds b = pdf_bounds(d, x);
      const BigReal exact = pair_density_exact(p, x);
      EXPECT_LE(b.lo, exact) << R << ' ' << x.to_double();
      EXPECT_GE(b.hi, exact) << R << ' ' << x.to_double();
    }
  }
}

TEST(Build, ThreeTermMergedPathMatchesDirectConvolution) {
  // 1X + 1Y + 2Z = 2 chi-square(2) + 2 chi-square(1): exponential (rate 1/2, mean 2) convolved with 2 chi-square(1).
  const CertifiedDensity d = build_d({1, 1, 2}, 6, 1e-8);
  for (double x : {0.1, 0.8, 2.5, 5.5}) {
    auto f = [&](const Ref& t) {
      return exp(-t / 2) / 2 * testing_support::chi2_scaled_pdf(Ref(2), 1, Ref(x) - t);
    };
    // Singular at t = x: substitute t = x - u^2.
    const Ref oracle = quad([&](const Ref& u) { return 2 * u * f(Ref(x) - u * u); }, Ref(0), sqrt(Ref(x)));
    const Bounds b = pdf_bounds(d, big(x));
    // The 50-digit oracle carries its own error of about 1e-48.
    const Ref tol = oracle * Ref(1e-45) + to_ref(b.uncertified);
    EXPECT_LE(to_ref(b.lo) - tol, oracle) << x;
    EXPECT_GE(to_ref(b.hi) + tol, oracle) << x;
    EXPECT_LT(rel_diff((b.lo + b.hi) / 2, oracle), 1e-7) << x;
  }
}

TEST(Build, FourTermMergedPathMatchesDirectConvolution) {
  // 1X + 1Y + 1Z + 3W: chi-square(2) and pair (1, 3) with gamma(3/2) from the third weight.
  const std::vector<double> w = {1, 1, 1, 3};
  const CertifiedDensity d = build_d(w, 6, 1e-8);
  EXPECT_EQ(sandwich_violations(d, w, 1, 12), 0);
}

TEST(PdfBounds, OutsideRangeIsRejected) {
  const CertifiedDensity d = build_d({1, 2, 3, 4}, 3, 0.05);
  EXPECT_THROW(pdf_bounds(d, big(-0.1)), DomainError);
  EXPECT_THROW(pdf_bounds(d, big(3.01)), DomainError);
  EXPECT_THROW(cdf_bounds(d, big(3.01)), DomainError);
}

TEST(PdfBounds, AtZeroBracketsOracle) {
  // Two pairs: the density vanishes at 0 linearly; with one pair it is finite.
  const CertifiedDensity one = build_d({1, 2}, 2, 0.05);
  const Bounds b1 = pdf_bounds(one, big(0));
  const BigReal oracle = quad_convolve_density(make_weight_list(std::vector<double>{1, 2}, 1, kBits), big(0));
  EXPECT_LE(b1.lo, oracle * (1 + 1e-15));
  EXPECT_GE(b1.hi, oracle * (1 - 1e-15));
  const CertifiedDensity two = build_d({1, 2, 3, 4}, 2, 0.05);
  const Bounds b2 = pdf_bounds(two, big(0));
  EXPECT_EQ(b2.lo, 0.0);
  EXPECT_GE(b2.hi, 0.0);
}

TEST(PdfBounds, BracketsMonteCarloKernelEstimate) {
  const CertifiedDensity d = build_d({1, 2, 3, 4}, 3, 1e-6);
  const Bounds b = pdf_bounds(d, big(1));
  const McEstimate mc = mc_density({1, 2, 3, 4}, 1, 1.0, 0.01, 10'000'000, 42, 0);
  EXPECT_GE(mc.value + 3 * mc.std_error, b.lo.to_double());
  EXPECT_LE(mc.value - 3 * mc.std_error, b.hi.to_double());
}

TEST(CdfBounds, Examples) {
  const CertifiedDensity d = build_d({1, 2}, 40, 1e-8);
  const Bounds zero = cdf_bounds(d, big(0));
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_EQ(zero.hi, 0.0);
  const Bounds b = cdf_bounds(d, big(40));
  const Ref oracle = quad([](const Ref& x) { return two_weight_pdf(Ref(1), Ref(2), x); }, Ref(0), Ref(40), 1e-30);
  EXPECT_LE(to_ref(b.lo), oracle);
  EXPECT_GE(to_ref(b.hi), oracle);
}

TEST(CdfBounds, MarchenkoPasturN20BracketsMonteCarlo) {
  const MpWeights mp = mp_quantile_weights(20, kBits);
  const CertifiedDensity d = build(make_weight_list(mp.weights, 1, kBits), big(1.5), big(0.05));
  const Bounds b = cdf_bounds(d, big(1));
  std::vector<double> w;
  for (const auto& v : mp.weights) w.push_back(v.to_double());
  const McEstimate mc = mc_tail(w, 1, 1.0, 1'000'000, 42, 0);
  EXPECT_GE(mc.value + 3 * mc.std_error, b.lo.to_double());
  EXPECT_LE(mc.value - 3 * mc.std_error, b.hi.to_double());
}

TEST(Build, RejectsBadParameters) {
  const WeightList w = make_weight_list(std::vector<double>{1, 2}, 1, kBits);
  EXPECT_THROW(build(w, big(1), big(0)), DomainError);
  EXPECT_THROW(build(w, big(1), big(1)), DomainError);
  EXPECT_THROW(build(w, big(0), big(0.05)), DomainError);
  BuildOptions tiny;
  tiny.degree_cap = 4;
  EXPECT_THROW(build(make_weight_list(std::vector<double>{0.5, 4}, 1, kBits), big(60), big(1e-30), tiny),
               BudgetUnreachable);
}

TEST(Build, RateCollisionIsJittered) {
  // The pair (1, 3) and the merged gamma 1.5 + 1.5 share the rate -1/3.
  const std::vector<double> w = {1, 1.5, 1.5, 3};
  const CertifiedDensity d = build_d(w, 5, 1e-4);
  EXPECT_GT(d.pairing.jitter, 0.0);
  EXPECT_GT(d.jitter_bound, 0.0);
  EXPECT_EQ(sandwich_violations(d, w, 1, 10), 0);
}

TEST(Build, EvenDofIsExactGammaAlgebra) {
  const std::vector<double> w = {0.5, 1.25, 2};
  const CertifiedDensity d = build_d(w, 6, 0.05, 2);
  EXPECT_TRUE(d.pairing.pairs.empty());
  for (double x : {0.3, 1.0, 4.0}) {
    const Bounds b = pdf_bounds(d, big(x));
    const long double oracle = quad_convolve_density(std::vector<long double>(w.begin(), w.end()), 2, x);
    EXPECT_NEAR(b.lo.to_double(), static_cast<double>(oracle), 1e-14 * static_cast<double>(oracle));
    EXPECT_LT(((b.hi - b.lo) / b.lo).to_double(), 1e-60);
  }
}

TEST(Build, HigherOddDofSandwich) {
  const std::vector<double> w = {0.4, 0.9, 1.3, 2.2};
  const CertifiedDensity d = build_d(w, 20, 1e-3, 3);
  EXPECT_EQ(sandwich_violations(d, w, 3, 20), 0);
}

TEST(Build, SerializesWithPlanAndSlack) {
  const CertifiedDensity d = build_d({1, 2, 3}, 4, 0.05);
  const nlohmann::json j = to_json(d);
  for (const char* key : {"C", "x_max", "R_max", "orders", "slack", "lower", "upper"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["orders"].size(), 1u);
}

TEST(NumericConvolve, ExponentialsGiveGammaTwo) {
  SampledDensity f{0.0, 1e-3, {}};
  for (int k = 0; k <= 20000; ++k) f.values.push_back(std::exp(-f.x(k)));
  const SampledDensity g = numeric_convolve(f, f);
  double worst = 0;
  for (std::size_t k = 0; k <= 20000; k += 7) {
    const double x = g.x(k);
    worst = std::max(worst, std::fabs(g.at(k) - x * std::exp(-x)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(NumericConvolve, NarrowSpikeIsAnIdentity) {
  const double h = 1e-3;
  SampledDensity spike{0.0, h, {}};
  // Unit Simpson mass concentrated on the first node.
  spike.values = {3 / h};
  spike.values.resize(5001, 0.0);
  SampledDensity g{0.0, h, {}};
  for (int k = 0; k <= 5000; ++k) g.values.push_back(0.5 * std::exp(-0.5 * g.x(k)));
  const SampledDensity r = numeric_convolve(spike, g);
  for (std::size_t k = 50; k <= 5000; k += 50) EXPECT_NEAR(r.at(k), g.at(k), 1e-3) << k;
}

TEST(NumericConvolve, ConservesMassAndChecksGrids) {
  SampledDensity f{0.0, 2e-3, {}}, g{0.0, 2e-3, {}};
  for (int k = 0; k <= 10000; ++k) {
    const double x = f.x(k);
    f.values.push_back(x * x * std::exp(-x) / 2);
    g.values.push_back(3 * std::exp(-3 * x));
  }
  const double mf = sampled_mass(f), mg = sampled_mass(g);
  EXPECT_NEAR(mf, 1, 1e-6);
  EXPECT_NEAR(mg, 1, 1e-6);
  EXPECT_NEAR(sampled_mass(numeric_convolve(f, g)), mf * mg, 1e-6);
  SampledDensity other{0.0, 1e-3, {1.0, 1.0, 1.0}};
  EXPECT_THROW(numeric_convolve(f, other), GridMismatch);
}

// Properties

TEST(CertifiedDensityProperty, SandwichForRandomWeightLists) {
  Gen gen(67);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = gen.integer(2, 8);
    std::vector<double> w = gen.distinct_weights(n, 0.05, 4);
    if (trial % 4 == 3) w[1] = w[0];  // exercise the merged path
    double mean = 0;
    for (double v : w) mean += v;
    const double x_max = gen.uniform(0.5, 2.5) * mean;
    const double R = trial % 2 ? 1e-3 : 0.05;
    const CertifiedDensity d = build_d(w, x_max, R);
    EXPECT_EQ(sandwich_violations(d, w, 1, 20), 0) << "trial " << trial;
  }
  const MpWeights mp = mp_quantile_weights(6, kBits);
  std::vector<double> w;
  for (const auto& v : mp.weights) w.push_back(v.to_double());
  const CertifiedDensity d = build(make_weight_list(mp.weights, 1, kBits), big(1.5), big(0.05));
  EXPECT_EQ(sandwich_violations(d, w, 1, 20), 0);
}

TEST(CertifiedDensityProperty, LowerBelowUpperPlusSlack) {
  Gen gen(71);
  for (int trial = 0; trial < 8; ++trial) {
    const auto w = gen.distinct_weights(gen.integer(2, 10), 0.05, 3);
    const CertifiedDensity d = build_d(w, 3, 0.05);
    for (int k = 0; k <= 30; ++k) {
      const BigReal x = big(0.1 * k);
      const Magnitude lo = evaluate_with_magnitude(d.lower, x), hi = evaluate_with_magnitude(d.upper, x);
      const Bounds b = pdf_bounds(d, x);
      EXPECT_GE(b.lo, 0.0);
      EXPECT_LE(b.lo, b.hi);
      EXPECT_LE(lo.value, hi.value + d.slack + ldexp(hi.abs_sum + lo.abs_sum, -200));
    }
  }
}

TEST(CertifiedDensityProperty, LowerIsMonotoneInEachOrder) {
  Gen gen(73);
  for (int trial = 0; trial < 6; ++trial) {
    const auto w = gen.distinct_weights(6, 0.1, 3);
    const WeightList wl = make_weight_list(w, 1, kBits);
    std::vector<unsigned> orders = {2, 2, 2};
    BuildOptions opt;
    opt.prune = false;
    opt.orders = orders;
    const CertifiedDensity base = build(wl, big(4), big(0.05), opt);
    for (std::size_t i = 0; i < orders.size(); ++i) {
      auto more = orders;
      more[i] += 2;
      opt.orders = more;
      const CertifiedDensity d = build(wl, big(4), big(0.05), opt);
      for (int k = 1; k <= 20; ++k) {
        const BigReal x = big(0.2 * k);
        const Magnitude m = evaluate_with_magnitude(d.lower, x);
        EXPECT_GE(m.value + ldexp(m.abs_sum, -200), evaluate(base.lower, x)) << i << ' ' << k;
      }
    }
  }
}

TEST(CertifiedDensityProperty, BudgetHonoredAtRangeEnd) {
  for (double R : {0.05, 1e-3, 1e-6}) {
    for (const std::vector<double>& w :
         {std::vector<double>{1, 2}, std::vector<double>{0.3, 0.7, 1.1, 2.9}, std::vector<double>{0.2, 0.5, 0.9, 1.4, 2, 3.1}}) {
      double mean = 0;
      for (double v : w) mean += v;
      const CertifiedDensity d = build_d(w, 2 * mean, R);
      const Bounds b = cdf_bounds(d, d.x_max);
      EXPECT_LE(((b.hi - b.lo) / b.lo).to_double(), R * 1.1) << R << ' ' << w.size();
    }
  }
}

TEST(CertifiedDensityProperty, DegenerateWeightsMatchOracle) {
  Gen gen(79);
  for (int trial = 0; trial < 4; ++trial) {
    auto v = gen.distinct_weights(3, 0.1, 3);
    const std::vector<double> w = {v[0], v[0], v[1], v[2]};
    const CertifiedDensity d = build_d(w, 2 * (2 * v[0] + v[1] + v[2]), 1e-3);
    EXPECT_EQ(sandwich_violations(d, w, 1, 20), 0);
  }
}

TEST(CertifiedDensityProperty, ScalingCovariance) {
  Gen gen(83);
  for (int trial = 0; trial < 6; ++trial) {
    const auto w = gen.distinct_weights(gen.integer(2, 7), 0.1, 3);
    const double c = gen.log_uniform(0.01, 100);
    std::vector<double> cw;
    for (double v : w) cw.push_back(v * c);
    const CertifiedDensity d = build_d(w, 4, 1e-3);
    const CertifiedDensity dc = build(make_weight_list(cw, 1, kBits), big(4) * c, big(1e-3));
    EXPECT_EQ(d.plan.orders, dc.plan.orders);
    for (double x : {0.3, 1.0, 3.7}) {
      const Bounds b = pdf_bounds(d, big(x));
      const Bounds bc = pdf_bounds(dc, big(x) * c);
      // Weights c*w are not exact binary multiples, so agreement is to the input rounding (2^-50).
      EXPECT_LT((abs(bc.lo * c / b.lo - 1)).to_double(), 1e-12) << c;
      EXPECT_LT((abs(bc.hi * c / b.hi - 1)).to_double(), 1e-12) << c;
    }
  }
  // With an exact power-of-two scale the agreement is to working precision.
  const CertifiedDensity d = build_d({0.3, 0.7, 1.9}, 4, 1e-3);
  const CertifiedDensity d8 = build_d({2.4, 5.6, 15.2}, 32, 1e-3);
  for (double x : {0.5, 2.0}) {
    const Bounds b = pdf_bounds(d, big(x)), b8 = pdf_bounds(d8, big(8 * x));
    EXPECT_LT((abs(b8.lo * 8 / b.lo - 1)).to_double(), 1e-60);
    EXPECT_LT((abs(b8.hi * 8 / b.hi - 1)).to_double(), 1e-60);
  }
}
