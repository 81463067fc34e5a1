#include "chisum/vacua.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <numbers>
#include <thread>

#include "chisum/errors.hpp"
#include "chisum/quadrature.hpp"
#include "chisum/random.hpp"
#include "chisum/special_functions.hpp"

namespace chisum {

double mp_pdf(double lambda, int /*N*/) {
  if (!(lambda > 0) || !(lambda < 4)) return 0;
  return std::sqrt(lambda * (4 - lambda)) / (2 * std::numbers::pi * lambda);
}

BigReal mp_cdf(const BigReal& q) {
  const PrecisionBits bits = q.precision();
  if (q <= 0.0) return BigReal::zero(bits);
  if (q >= 4.0) return BigReal(1, bits);
  const BigReal theta = asin(sqrt(q) / 2);
  return (2 * theta + sin(2 * theta)) / BigReal::pi(bits);
}

MpWeights mp_quantile_weights(int N, PrecisionBits bits) {
  if (N < 2) throw DomainError("mp_quantile_weights needs N >= 2");
  MpWeights out;
  out.N = N;
  const BigReal tol = ldexp(BigReal(1, bits), -60);
  for (int b = 2; b <= N; ++b) {
    BigReal lambda(4, bits);
    if (b < N) {
      const BigReal target = BigReal(b, bits) / N;
      BigReal lo = BigReal::zero(bits), hi(4, bits);
      while (hi - lo > tol) {
        BigReal mid = ldexp(lo + hi, -1);
        if (mp_cdf(mid) < target)
          lo = std::move(mid);
        else
          hi = std::move(mid);
      }
      lambda = ldexp(lo + hi, -1);
    }
    out.weights.push_back(BigReal(1, bits) / (lambda * N));
    out.lambdas.push_back(std::move(lambda));
  }
  return out;
}

namespace {

double log_or_neg_inf(const BigReal& v) { return v.sign() > 0 ? v.log_abs() : -INFINITY; }

}  // namespace

SweepRow p_n(int N, double R_max, const PnOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  PrecisionBits bits = std::max(options.start_bits, kMinPrecision);
  for (;;) {
    const MpWeights mp = mp_quantile_weights(N, bits);
    const WeightList w = make_weight_list(mp.weights, 1, bits);
    const CertifiedDensity d = build(w, BigReal(options.x_max, bits), BigReal(R_max, bits));
    const Bounds b = cdf_bounds(d, BigReal(1, bits));
    const double needed = b.cancellation_bits + options.margin_bits;
    if (needed > static_cast<double>(bits)) {
      if (bits >= options.max_bits)
        throw Error("P_N for N = " + std::to_string(N) + " needs more than " + std::to_string(options.max_bits) +
                    " bits of precision");
      const auto want = static_cast<PrecisionBits>(std::ceil((needed + 64) / 64)) * 64;
      bits = std::min(options.max_bits, std::max(2 * bits, want));
      continue;
    }
    SweepRow row;
    row.N = N;
    row.p_lo = b.lo;
    row.p_hi = b.hi;
    row.log_p_lo = log_or_neg_inf(b.lo);
    row.log_p_hi = log_or_neg_inf(b.hi);
    row.rel_err = b.lo.sign() > 0 ? ((b.hi - b.lo) / b.lo).to_double() : INFINITY;
    row.uncertified = b.lo.sign() > 0 ? (b.uncertified / b.lo).to_double() : 0;
    row.precision_bits = bits;
    row.terms = d.upper.term_count();
    row.orders = d.plan.orders;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  }
}

BigReal t_term_pdf(int N, const BigReal& x) {
  if (N < 1) throw DomainError("t_term_pdf needs N >= 1");
  const PrecisionBits bits = x.precision();
  const double xd = x.to_double();
  const double zd = (N * xd - 2) * (N * xd - 2) / 8;
  // For N x < 2 the two hypergeometric terms cancel down to the Gaussian tail.
  const PrecisionBits guard = N * xd < 2 ? static_cast<PrecisionBits>(std::ceil(1.5 * zd / std::log(2.0))) : 0;
  const PrecisionBits work = bits + 64 + guard;
  const BigReal xw(x, work);
  const BigReal n(N, work);
  const BigReal u = n * xw - 2;
  const BigReal z = u * u / 8;
  const BigReal quarter = n / 4;
  const BigReal pre = pow(BigReal(2, work), -quarter - 2) * n * exp(-(n * n * xw * xw) / 8);
  const BigReal first = sqrt(BigReal(2, work)) * kummer_1f1(quarter, BigReal(0.5, work), z).value /
                        gamma((n + 2) / 4);
  const BigReal second = u * kummer_1f1((n + 2) / 4, BigReal(1.5, work), z).value / gamma(quarter);
  BigReal v = pre * (first + second);
  if (v < 0.0) v = BigReal::zero(work);
  return BigReal(v, bits);
}

double t_term_pdf(int N, double x) { return t_term_pdf(N, BigReal(x, 128)).to_double(); }

std::pair<double, double> t_term_range(int N) {
  const double n = N;
  // Chernoff: P(chi2_N / N > y) <= (y e^{1-y})^{N/2}. Solve for a 1e-13 tail, then
  // add 8 standard deviations of the 2/N Gaussian on both sides.
  const double target = 2.0 * std::log(1e-13) / n;
  double lo = 1, hi = 2;
  while (std::log(hi) + 1 - hi > target) hi *= 2;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::log(mid) + 1 - mid > target ? lo : hi) = mid;
  }
  return {-16.0 / n, hi + 16.0 / n};
}

FullMassResult full_mass_tail(int N, double grid_step, double R_max) {
  if (N < 2) throw DomainError("full_mass_tail needs N >= 2");
  if (!(grid_step > 0)) throw GridMismatch("grid step must be positive");
  const auto [t_lo, t_hi] = t_term_range(N);
  const PrecisionBits bits = default_precision();
  const long K = static_cast<long>(std::ceil(t_hi / grid_step));
  const double s_max = static_cast<double>(K) * grid_step;

  const MpWeights mp = mp_quantile_weights(N, bits);
  CertifiedDensity d = build(make_weight_list(mp.weights, 1, bits), BigReal(s_max, bits), BigReal(R_max, bits));
  d.leftover_nodes = 16;

  // -S sampled on [-s_max, 0].
  SampledDensity neg_s{-s_max, grid_step, std::vector<double>(static_cast<std::size_t>(K + 1))};
  for (long k = 0; k <= K; ++k) {
    const double x = static_cast<double>(k) * grid_step;
    const Bounds b = pdf_bounds(d, BigReal(x, bits));
    double v = ldexp(b.lo + b.hi, -1).to_double();
    if (!std::isfinite(v)) v = 0;
    neg_s.values[static_cast<std::size_t>(K - k)] = v;
  }
  const long j0 = static_cast<long>(std::floor(t_lo / grid_step));
  const long j1 = static_cast<long>(std::ceil(t_hi / grid_step));
  SampledDensity t{static_cast<double>(j0) * grid_step, grid_step, {}};
  for (long j = j0; j <= j1; ++j) t.values.push_back(t_term_pdf(N, static_cast<double>(j) * grid_step));

  const SampledDensity diff = numeric_convolve(t, neg_s);
  // diff.origin = (j0 - K) h; the sample at index K - j0 sits at 0.
  const long zero_index = K - j0;
  SampledDensity upper{0, grid_step, {}};
  upper.values.assign(diff.values.begin() + zero_index, diff.values.end());

  FullMassResult out;
  out.value = sampled_mass(upper);
  out.grid_step = grid_step;
  const Bounds s1 = cdf_bounds(d, BigReal(1, bits));
  out.s_only = ldexp(s1.lo + s1.hi, -1).to_double();
  return out;
}

McEstimate mc_full_mass(int N, long samples, std::uint64_t seed, unsigned threads) {
  const MpWeights mp = mp_quantile_weights(N, 128);
  std::vector<double> w;
  for (const auto& v : mp.weights) w.push_back(v.to_double());
  const double inv_n = 1.0 / N;
  return mc_mean(
      [&](CounterRng& rng) {
        double s = 0;
        for (double wi : w) {
          const double z = rng.normal();
          s += wi * z * z;
        }
        double t = 0;
        for (int j = 0; j < N; ++j) {
          const double z = rng.normal();
          t += z * z;
        }
        t = t * inv_n + 2.0 * inv_n * rng.normal();
        return s <= t ? 1.0 : 0.0;
      },
      samples, seed, threads);
}

std::string to_string(FitModel m) { return m == FitModel::Power ? "POWER" : "LINLOG"; }

namespace {

struct ModelEval {
  Eigen::VectorXd residual;  // y - model
  Eigen::MatrixXd jacobian;  // d model / d params
  bool valid = true;
};

ModelEval evaluate_model(FitModel model, const Eigen::VectorXd& p, const std::vector<int>& N,
                         const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(N.size());
  ModelEval e{Eigen::VectorXd(n), Eigen::MatrixXd(n, p.size())};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = N[static_cast<std::size_t>(i)];
    double m = 0;
    if (model == FitModel::Power) {
      const double xp = std::pow(x, p[1]);
      m = -p[0] * xp;
      e.jacobian(i, 0) = -xp;
      e.jacobian(i, 1) = -p[0] * xp * std::log(x);
    } else {
      if (p[0] + x <= 0) {
        e.valid = false;
        return e;
      }
      m = std::log(p[0] + x) - p[1] - p[2] * x;
      e.jacobian(i, 0) = 1 / (p[0] + x);
      e.jacobian(i, 1) = -1;
      e.jacobian(i, 2) = -x;
    }
    e.residual[i] = y[static_cast<std::size_t>(i)] - m;
  }
  return e;
}

// Ordinary least squares of v on [1, u]; returns (intercept, slope).
std::pair<double, double> line_fit(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  double su = 0, sv = 0, suu = 0, suv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sv += v[i];
    suu += u[i] * u[i];
    suv += u[i] * v[i];
  }
  const double slope = (n * suv - su * sv) / (n * suu - su * su);
  return {(sv - slope * su) / n, slope};
}

}  // namespace

FitResult fit(const std::vector<int>& N, const std::vector<double>& y, FitModel model) {
  if (N.size() != y.size()) throw DomainError("fit needs one log-probability per N");
  const std::size_t min_rows = model == FitModel::Power ? 3 : 4;
  if (N.size() < min_rows) throw DomainError("too few rows for the " + to_string(model) + " fit");
  for (double v : y)
    if (!std::isfinite(v)) throw DomainError("fit data must be finite");

  Eigen::VectorXd p;
  std::vector<double> u, v;
  if (model == FitModel::Power) {
    for (std::size_t i = 0; i < N.size(); ++i) {
      if (!(y[i] < 0)) throw DomainError("POWER fit needs log P < 0");
      u.push_back(std::log(static_cast<double>(N[i])));
      v.push_back(std::log(-y[i]));
    }
    const auto [ic, sl] = line_fit(u, v);
    p = Eigen::Vector2d(std::exp(ic), sl);
  } else {
    const double a0 = 1.0;
    for (std::size_t i = 0; i < N.size(); ++i) {
      u.push_back(N[i]);
      v.push_back(y[i] - std::log(a0 + N[i]));
    }
    const auto [ic, sl] = line_fit(u, v);
    p = Eigen::Vector3d(a0, -ic, -sl);
  }

  ModelEval cur = evaluate_model(model, p, N, y);
  double rss = cur.residual.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  for (; it < 10000; ++it) {
    const Eigen::MatrixXd jtj = cur.jacobian.transpose() * cur.jacobian;
    const Eigen::VectorXd jtr = cur.jacobian.transpose() * cur.residual;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
    const Eigen::VectorXd step = damped.ldlt().solve(jtr);
    const Eigen::VectorXd trial = p + step;
    ModelEval next = evaluate_model(model, trial, N, y);
    const double trial_rss = next.valid ? next.residual.squaredNorm() : INFINITY;
    if (trial_rss <= rss) {
      p = trial;
      cur = std::move(next);
      rss = trial_rss;
      lambda = std::max(lambda / 10, 1e-12);
      if (step.norm() < 1e-10) break;
    } else {
      if (step.norm() < 1e-10) break;
      lambda *= 10;
      if (lambda > 1e16) break;
    }
  }
  if (it >= 10000) throw NonConvergence(to_string(model) + " fit did not converge in 10^4 iterations");

  FitResult out;
  out.model = model;
  out.iterations = it;
  const auto n = static_cast<double>(N.size());
  const auto k = static_cast<double>(p.size());
  const double s2 = rss / std::max(1.0, n - k);
  const Eigen::MatrixXd cov = s2 * (cur.jacobian.transpose() * cur.jacobian).inverse();
  const std::vector<std::string> names =
      model == FitModel::Power ? std::vector<std::string>{"c", "p"} : std::vector<std::string>{"a", "c", "d"};
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out.params[names[static_cast<std::size_t>(i)]] = p[i];
    out.std_errors[names[static_cast<std::size_t>(i)]] = std::sqrt(std::max(0.0, cov(i, i)));
  }
  for (Eigen::Index i = 0; i < cur.residual.size(); ++i) out.residuals.push_back(cur.residual[i]);
  return out;
}

FitResult fit(const std::vector<SweepRow>& rows, FitModel model) {
  std::vector<int> N;
  std::vector<double> y;
  for (const auto& r : rows) {
    N.push_back(r.N);
    y.push_back(0.5 * (r.log_p_lo + r.log_p_hi));
  }
  return fit(N, y, model);
}

double implied_vacua_bound(double d) {
  if (!(d > 0)) throw DomainError("implied_vacua_bound needs d > 0");
  const double target = -500 * std::log(10.0);
  auto f = [&](double n) { return std::log(n) - d * n - target; };
  double lo = 1 / d, hi = 1 / d;
  while (f(hi) > 0) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SweepResult sweep(const std::vector<int>& Ns, double R_max, unsigned jobs, const PnOptions& options,
                  const std::atomic<bool>* stop) {
  SweepResult out;
  std::vector<std::optional<SweepRow>> rows(Ns.size());
  std::vector<std::string> errors(Ns.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < Ns.size(); i = next++) {
      if (stop != nullptr && stop->load()) {
        errors[i] = "interrupted";
        continue;
      }
      try {
        rows[i] = p_n(Ns[i], R_max, options);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, Ns.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (rows[i])
      out.rows.push_back(std::move(*rows[i]));
    else
      out.failures.push_back({Ns[i], errors[i]});
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.N < b.N; });
  return out;
}

}  // namespace chisum
