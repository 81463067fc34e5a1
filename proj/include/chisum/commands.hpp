#pragma once

// Command implementations behind the chisum executable. Each writes its CSV or
// JSON to `out` and returns the process exit code: 0 ok, 2 usage or domain
// error, 3 partial failure.

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chisum/big_real.hpp"

namespace chisum {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;

struct RunConfig {
  PrecisionBits precision_bits = kDefaultPrecision;
  double R_max = 0.05;
  std::optional<double> x_max;
  std::uint64_t seed = 42;
  double grid_step = 1e-3;
  std::string output_path;
  unsigned jobs = 0;
  unsigned dof = 1;
  /// Write measured wall times; off gives byte-identical sweep output.
  bool timing = true;
};

/// Parses a list of decimal weights at the configured precision, or builds the
/// Marchenko-Pastur weights for mp_N when mp_N > 0.
std::vector<BigReal> resolve_weights(const std::vector<std::string>& weights, int mp_N, PrecisionBits bits);

/// CSV x,lo,hi.
int cmd_density(const std::vector<BigReal>& weights, const std::vector<std::string>& xs, const RunConfig& cfg,
                std::ostream& out);
/// JSON {lo, hi, log_lo, log_hi, uncertified, ...} for P(Z <= t).
int cmd_prob(const std::vector<BigReal>& weights, const std::string& t, const RunConfig& cfg, std::ostream& out);
/// Writes sweep.csv and fit.json into cfg.output_path (a directory).
int cmd_vacua_sweep(int N_min, int N_max, int step, const RunConfig& cfg, std::ostream& log,
                    const std::atomic<bool>* stop = nullptr);
/// CSV n,seconds,terms; the fitted log-log slope goes to `log`.
int cmd_bench(const std::vector<int>& n_list, const RunConfig& cfg, std::ostream& out, std::ostream& log);
/// CSV x,mc,mc_err,quad,lo,hi.
int cmd_oracle(const std::vector<BigReal>& weights, const std::vector<std::string>& xs, long samples,
               double bandwidth, const RunConfig& cfg, std::ostream& out);
/// CSV b_prime,lambda_sq,weight.
int cmd_weights(int N, const RunConfig& cfg, std::ostream& out);
/// JSON {N, value, s_only, grid_step, certified}.
int cmd_full_mass(int N, const RunConfig& cfg, std::ostream& out);

/// Least-squares slope of log seconds against log n.
double loglog_slope(const std::vector<int>& n, const std::vector<double>& seconds);

}  // namespace chisum
