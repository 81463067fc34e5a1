#include "chisum/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chisum/certified_density.hpp"
#include "chisum/errors.hpp"
#include "chisum/oracles.hpp"
#include "chisum/serialization.hpp"
#include "chisum/vacua.hpp"

namespace chisum {

namespace {

std::string fmt(double v, int digits = 17) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

BigReal default_x_max(const std::vector<BigReal>& xs, const RunConfig& cfg, PrecisionBits bits) {
  if (cfg.x_max) return BigReal(*cfg.x_max, bits);
  BigReal m(1.0, bits);
  for (const auto& x : xs) m = max(m, x);
  return m;
}

std::vector<BigReal> parse_all(const std::vector<std::string>& xs, PrecisionBits bits) {
  std::vector<BigReal> out;
  for (const auto& s : xs) out.push_back(BigReal::parse(s, bits));
  return out;
}

}  // namespace

std::vector<BigReal> resolve_weights(const std::vector<std::string>& weights, int mp_N, PrecisionBits bits) {
  if (mp_N > 0) {
    if (!weights.empty()) throw DomainError("give either --weights or --mp, not both");
    return mp_quantile_weights(mp_N, bits).weights;
  }
  if (weights.empty()) throw DomainError("no weights given (use --weights or --mp)");
  auto w = parse_all(weights, bits);
  for (const auto& v : w)
    if (!(v > 0.0) || !v.is_finite()) throw DomainError("weights must be positive, got " + v.to_string(12));
  return w;
}

int cmd_density(const std::vector<BigReal>& weights, const std::vector<std::string>& xs, const RunConfig& cfg,
                std::ostream& out) {
  const PrecisionBits bits = cfg.precision_bits;
  const auto points = parse_all(xs, bits);
  if (points.empty()) throw DomainError("no abscissae given (use -x)");
  for (const auto& x : points)
    if (x < 0.0) throw DomainError("abscissa " + x.to_string(12) + " is negative; the density lives on x >= 0");
  const auto d = build(make_weight_list(weights, cfg.dof, bits), default_x_max(points, cfg, bits),
                       BigReal(cfg.R_max, bits));
  out << "x,lo,hi\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Bounds b = pdf_bounds(d, points[i]);
    out << xs[i] << ',' << decimal(b.lo) << ',' << decimal(b.hi) << '\n';
  }
  return kExitOk;
}

int cmd_prob(const std::vector<BigReal>& weights, const std::string& t_text, const RunConfig& cfg,
             std::ostream& out) {
  const PrecisionBits bits = cfg.precision_bits;
  const BigReal t = BigReal::parse(t_text, bits);
  if (t < 0.0 || !t.is_finite()) throw DomainError("t must be finite and >= 0");
  const BigReal x_max = cfg.x_max ? BigReal(*cfg.x_max, bits) : (t.is_zero() ? BigReal(1.0, bits) : t);
  const auto d = build(make_weight_list(weights, cfg.dof, bits), x_max, BigReal(cfg.R_max, bits));
  const Bounds b = cdf_bounds(d, t);
  nlohmann::json j;
  j["t"] = t_text;
  j["lo"] = decimal(b.lo);
  j["hi"] = decimal(b.hi);
  j["log_lo"] = log_value(b.lo);
  j["log_hi"] = log_value(b.hi);
  j["uncertified"] = decimal(b.uncertified);
  j["orders"] = d.plan.orders;
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_vacua_sweep(int N_min, int N_max, int step, const RunConfig& cfg, std::ostream& log,
                    const std::atomic<bool>* stop) {
  if (N_min < 2 || N_max < N_min) throw DomainError("need 2 <= N_min <= N_max");
  if (step < 1) throw DomainError("step must be positive");
  std::vector<int> Ns;
  for (int N = N_min; N <= N_max; N += step) Ns.push_back(N);
  PnOptions options;
  options.start_bits = cfg.precision_bits;
  if (cfg.x_max) options.x_max = *cfg.x_max;
  const SweepResult result = sweep(Ns, cfg.R_max, cfg.jobs, options, stop);

  const std::filesystem::path dir = cfg.output_path.empty() ? std::filesystem::path(".") : std::filesystem::path(cfg.output_path);
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    csv << "N,log_p_lo,log_p_hi,rel_err,seconds\n";
    for (const auto& r : result.rows)
      csv << r.N << ',' << fmt(r.log_p_lo) << ',' << fmt(r.log_p_hi) << ',' << fmt(r.rel_err) << ','
          << (cfg.timing ? fmt(r.seconds, 6) : "0") << '\n';
  }
  nlohmann::json j;
  j["rows"] = result.rows.size();
  j["R_max"] = cfg.R_max;
  for (FitModel m : {FitModel::Power, FitModel::LinLog}) {
    try {
      const FitResult f = fit(result.rows, m);
      j[to_string(m)] = to_json(f);
      if (m == FitModel::LinLog && f.params.at("d") > 0) j["implied_N_star"] = implied_vacua_bound(f.params.at("d"));
    } catch (const Error& e) {
      j[to_string(m)] = {{"error", e.what()}};
    }
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : result.failures) failures.push_back({{"N", f.N}, {"error", f.message}});
  j["failures"] = failures;
  std::ofstream(dir / "fit.json", std::ios::binary) << j.dump(2) << '\n';
  for (const auto& f : result.failures) log << "N = " << f.N << " failed: " << f.message << '\n';
  return result.failures.empty() ? kExitOk : kExitPartial;
}

double loglog_slope(const std::vector<int>& n, const std::vector<double>& seconds) {
  if (n.size() < 2) return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = std::log(static_cast<double>(n[i]));
    const double y = std::log(std::max(seconds[i], 1e-9));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(n.size());
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

int cmd_bench(const std::vector<int>& n_list, const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  if (n_list.empty()) throw DomainError("no sizes given");
  if (!std::is_sorted(n_list.begin(), n_list.end())) throw DomainError("bench sizes must be ascending");
  const PrecisionBits bits = cfg.precision_bits;
  const double x_max = cfg.x_max.value_or(kSweepXMax);
  std::vector<double> seconds;
  out << "n,seconds,terms\n";
  for (int n : n_list) {
    if (n < 1) throw DomainError("bench sizes must be positive");
    const auto weights = mp_quantile_weights(n + 1, bits).weights;
    const auto start = std::chrono::steady_clock::now();
    const auto d = build(make_weight_list(weights, 1, bits), BigReal(x_max, bits), BigReal(cfg.R_max, bits));
    cdf_bounds(d, BigReal(1, bits));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    seconds.push_back(s);
    out << n << ',' << (cfg.timing ? fmt(s, 6) : "0") << ',' << d.upper.term_count() << '\n';
  }
  if (n_list.size() >= 2) log << "log-log slope " << fmt(loglog_slope(n_list, seconds), 4) << '\n';
  return kExitOk;
}

int cmd_oracle(const std::vector<BigReal>& weights, const std::vector<std::string>& xs, long samples,
               double bandwidth, const RunConfig& cfg, std::ostream& out) {
  const PrecisionBits bits = cfg.precision_bits;
  const auto points = parse_all(xs, bits);
  if (points.empty()) throw DomainError("no abscissae given (use -x)");
  for (const auto& x : points)
    if (x < 0.0) throw DomainError("abscissa " + x.to_string(12) + " is negative");
  if (!(bandwidth > 0)) throw DomainError("bandwidth must be positive");
  const WeightList w = make_weight_list(weights, cfg.dof, bits);
  const auto d = build(w, default_x_max(points, cfg, bits), BigReal(cfg.R_max, bits));
  std::vector<double> wd;
  for (const auto& v : w.weights) wd.push_back(v.to_double());
  out << "x,mc,mc_err,quad,lo,hi\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const McEstimate mc = mc_density(wd, cfg.dof, points[i].to_double(), bandwidth, samples, cfg.seed, cfg.jobs);
    std::string quad;
    if (w.weights.size() <= 8) quad = quad_convolve_density(w, points[i]).to_string(19);
    const Bounds b = pdf_bounds(d, points[i]);
    out << xs[i] << ',' << fmt(mc.value, 10) << ',' << fmt(mc.std_error, 4) << ',' << quad << ','
        << b.lo.to_string(19) << ',' << b.hi.to_string(19) << '\n';
  }
  return kExitOk;
}

int cmd_weights(int N, const RunConfig& cfg, std::ostream& out) {
  const auto mp = mp_quantile_weights(N, cfg.precision_bits);
  out << "b_prime,lambda_sq,weight\n";
  for (std::size_t i = 0; i < mp.weights.size(); ++i)
    out << i + 2 << ',' << mp.lambdas[i].to_string(20) << ',' << mp.weights[i].to_string(20) << '\n';
  return kExitOk;
}

int cmd_full_mass(int N, const RunConfig& cfg, std::ostream& out) {
  const FullMassResult r = full_mass_tail(N, cfg.grid_step);
  nlohmann::json j{{"N", N}, {"value", r.value}, {"s_only", r.s_only}, {"grid_step", r.grid_step},
                   {"certified", r.certified}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace chisum
