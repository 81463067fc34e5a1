#pragma once

// Vacuum-stability application: Marchenko-Pastur weights, the fluctuation
// probability P_N = P(S <= 1) with S = sum_b a_b X_b, the T-term density and
// the full-mass combination, and the two fit models for log P_N.

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chisum/big_real.hpp"
#include "chisum/certified_density.hpp"
#include "chisum/oracles.hpp"

namespace chisum {

/// Marchenko-Pastur density with N sigma^2 = 1 (support (0, 4)); N does not enter.
double mp_pdf(double lambda, int N);
/// Closed-form CDF: (2 theta + sin 2 theta) / pi with theta = asin(sqrt(q) / 2).
BigReal mp_cdf(const BigReal& q);

struct MpWeights {
  int N = 0;
  std::vector<BigReal> lambdas;  // <lambda_b^2>, b = 2..N, increasing
  std::vector<BigReal> weights;  // 1 / (N <lambda_b^2>), decreasing
};

/// Solves mp_cdf(<lambda_b^2>) = b/N by bisection to 2^-60 for b = 2..N-1 and
/// puts <lambda_N^2> at the support edge 4.
MpWeights mp_quantile_weights(int N, PrecisionBits bits = default_precision());

/// Default certification range for P_N.
inline constexpr double kSweepXMax = 1.5;

struct SweepRow {
  int N = 0;
  double log_p_lo = 0;
  double log_p_hi = 0;
  double rel_err = 0;
  double seconds = 0;
  BigReal p_lo;
  BigReal p_hi;
  /// Relative heuristic error of the leftover-weight quadrature.
  double uncertified = 0;
  PrecisionBits precision_bits = 0;
  std::size_t terms = 0;
  std::vector<unsigned> orders;
};

struct PnOptions {
  double x_max = kSweepXMax;
  PrecisionBits start_bits = default_precision();
  PrecisionBits max_bits = 8192;
  /// Required precision headroom over the measured cancellation.
  double margin_bits = 64;
};

/// Certified bounds on P_N; rebuilds at higher precision while the symbolic
/// sums cancel to within margin_bits of the working precision.
SweepRow p_n(int N, double R_max, const PnOptions& options = {});

/// The T-term density f_T(x) = 2^{-N/4-2} N e^{-N^2 x^2/8} (sqrt 2 1F1(N/4; 1/2; z) / Gamma((N+2)/4)
/// + (N x - 2) 1F1((N+2)/4; 3/2; z) / Gamma(N/4)), z = (N x - 2)^2 / 8.
double t_term_pdf(int N, double x);
/// Same, with the result at `bits` of precision.
BigReal t_term_pdf(int N, const BigReal& x);

/// Interval carrying all but about 1e-12 of the f_T mass.
std::pair<double, double> t_term_range(int N);

struct FullMassResult {
  double value = 0;       // P(S <= T), the probability that the lightest mass squared is nonnegative
  double s_only = 0;      // P(S <= 1) midpoint at the same N
  double grid_step = 0;
  bool certified = false;  // always false: the numeric convolution error is heuristic
};

/// Samples the S density (certified-bound midpoint) and f_T on a shared grid,
/// convolves T with -S numerically and integrates the mass at or above 0.
FullMassResult full_mass_tail(int N, double grid_step, double R_max = 1e-6);

/// Direct simulation of P(S <= T) with T = chi-square(N)/N + Normal(0, 2/N).
McEstimate mc_full_mass(int N, long samples, std::uint64_t seed, unsigned threads = 0);

enum class FitModel { Power, LinLog };

std::string to_string(FitModel m);

struct FitResult {
  FitModel model = FitModel::Power;
  std::map<std::string, double> params;
  std::map<std::string, double> std_errors;
  std::vector<double> residuals;
  int iterations = 0;
};

/// Least squares on y = log P_N against N:
/// Power: y = -c N^p; LinLog: y = log(a + N) - c - d N.
/// Gauss-Newton with Levenberg damping; stops when the step norm is below 1e-10.
FitResult fit(const std::vector<int>& N, const std::vector<double>& log_p, FitModel model);
FitResult fit(const std::vector<SweepRow>& rows, FitModel model);

/// Largest root of log N - d N = -500 log 10.
double implied_vacua_bound(double d);

struct SweepFailure {
  int N = 0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending N
  std::vector<SweepFailure> failures;
};

/// p_n for every N on `jobs` worker threads (0 = hardware concurrency). Once
/// *stop becomes true no new N is started; skipped N are reported as failures.
SweepResult sweep(const std::vector<int>& Ns, double R_max, unsigned jobs = 0, const PnOptions& options = {},
                  const std::atomic<bool>* stop = nullptr);

}  // namespace chisum
