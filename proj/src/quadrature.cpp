#include "chisum/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace chisum {

namespace {

// Legendre P_n(x) and P_{n-1}(x) by the three-term recurrence.
template <class Real>
std::pair<Real, Real> legendre_pair(int n, const Real& x) {
  Real p0 = x * 0.0 + 1.0;
  Real p1 = x;
  if (n == 0) return {p0, x * 0.0};
  for (int k = 2; k <= n; ++k) {
    Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  return {p1, p0};
}

template <class Real>
void newton_root(int n, Real& x, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    auto [pn, pm] = legendre_pair<Real>(n, x);
    Real dp = n * (x * pn - pm) / (x * x - 1.0);
    x -= pn / dp;
  }
}

template <class Real>
Real weight_at(int n, const Real& x) {
  auto [pn, pm] = legendre_pair<Real>(n, x);
  Real dp = n * (x * pn - pm) / (x * x - 1.0);
  return 2.0 / ((1.0 - x * x) * dp * dp);
}

double initial_root(int n, int i) {
  double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
  newton_root<double>(n, x, 100);
  return x;
}

}  // namespace

const GaussLegendreRule<BigReal>& gauss_legendre_rule(int n, PrecisionBits bits) {
  static std::mutex mu;
  static std::map<std::pair<int, PrecisionBits>, std::unique_ptr<GaussLegendreRule<BigReal>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, bits}];
  if (!slot) {
    auto rule = std::make_unique<GaussLegendreRule<BigReal>>();
    const PrecisionBits work = bits + 32;
    // Quadratic convergence from a double-accurate start.
    int iterations = 2;
    for (PrecisionBits b = 50; b < work; b *= 2) ++iterations;
    for (int i = n - 1; i >= 0; --i) {
      BigReal x(initial_root(n, i), work);
      newton_root<BigReal>(n, x, iterations);
      rule->weights.emplace_back(weight_at<BigReal>(n, x), bits);
      rule->nodes.emplace_back(x, bits);
    }
    slot = std::move(rule);
  }
  return *slot;
}

const GaussLegendreRule<long double>& gauss_legendre_rule_ld(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussLegendreRule<long double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto rule = std::make_unique<GaussLegendreRule<long double>>();
    for (int i = n - 1; i >= 0; --i) {
      long double x = initial_root(n, i);
      newton_root<long double>(n, x, 4);
      rule->nodes.push_back(x);
      rule->weights.push_back(weight_at<long double>(n, x));
    }
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace chisum
