#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chisum/certified_density.hpp"
#include "chisum/commands.hpp"
#include "chisum/errors.hpp"
#include "chisum/oracles.hpp"
#include "chisum/serialization.hpp"
#include "chisum/vacua.hpp"

using namespace chisum;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Plain CSV: header first, '\n' endings, no CR, no locale separators.
void expect_csv(const std::string& text, const std::string& header) {
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(lines(text).front(), header);
  const auto hdr = fields(header);
  for (const auto& l : lines(text)) EXPECT_EQ(fields(l).size(), hdr.size()) << l;
}

std::vector<BigReal> weights(std::initializer_list<double> w) {
  std::vector<BigReal> out;
  for (double v : w) out.emplace_back(v);
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("chisum_test_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(CmdDensity, TwoRowsWithLoBelowHi) {
  std::ostringstream out;
  RunConfig cfg;
  ASSERT_EQ(cmd_density(weights({1, 2}), {"0.5", "1.0"}, cfg, out), kExitOk);
  expect_csv(out.str(), "x,lo,hi");
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    EXPECT_LE(BigReal::parse(f[1]), BigReal::parse(f[2]));
    EXPECT_GT(BigReal::parse(f[1]), 0.0);
  }
}

TEST(CmdDensity, FourWeightsBracketQuadrature) {
  std::ostringstream out;
  RunConfig cfg;
  cfg.R_max = 1e-6;
  ASSERT_EQ(cmd_density(weights({1, 2, 3, 4}), {"1"}, cfg, out), kExitOk);
  const auto f = fields(lines(out.str())[1]);
  const WeightList w = make_weight_list(weights({1, 2, 3, 4}), 1);
  const double q = quad_convolve_density(w, BigReal(1.0)).to_double();
  const double lo = BigReal::parse(f[1]).to_double(), hi = BigReal::parse(f[2]).to_double();
  EXPECT_LE(lo, q * (1 + 1e-12));
  EXPECT_GE(hi, q * (1 - 1e-12));
}

TEST(CmdDensity, NegativeInputsAreDomainErrors) {
  std::ostringstream out;
  RunConfig cfg;
  EXPECT_THROW(resolve_weights({"-1", "2"}, 0, 256), DomainError);
  EXPECT_THROW(resolve_weights({}, 0, 256), DomainError);
  EXPECT_THROW(resolve_weights({"1"}, 4, 256), DomainError);
  EXPECT_THROW(cmd_density(weights({1, 2}), {"-0.5"}, cfg, out), DomainError);
  EXPECT_THROW(cmd_density(weights({1, 2}), {}, cfg, out), DomainError);
}

TEST(CmdProb, ZeroThresholdGivesZeroAndMinusInfinity) {
  std::ostringstream out;
  RunConfig cfg;
  ASSERT_EQ(cmd_prob(weights({1, 2}), "0", cfg, out), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(BigReal::parse(j["lo"].get<std::string>()).to_double(), 0);
  EXPECT_EQ(BigReal::parse(j["hi"].get<std::string>()).to_double(), 0);
  EXPECT_EQ(j["log_lo"], "-inf");
  EXPECT_EQ(j["log_hi"], "-inf");
}

TEST(CmdProb, MarchenkoPasturN20BracketsMonteCarlo) {
  std::ostringstream out;
  RunConfig cfg;
  cfg.R_max = 1e-4;
  ASSERT_EQ(cmd_prob(resolve_weights({}, 20, 256), "1", cfg, out), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  const double lo = BigReal::parse(j["lo"].get<std::string>()).to_double();
  const double hi = BigReal::parse(j["hi"].get<std::string>()).to_double();
  EXPECT_NEAR(j["log_lo"].get<double>(), std::log(lo), 1e-12);
  std::vector<double> w;
  for (const auto& v : mp_quantile_weights(20).weights) w.push_back(v.to_double());
  const McEstimate mc = mc_tail(w, 1, 1.0, 1'000'000, 42, 0);
  EXPECT_LE(lo, mc.value + 3 * mc.std_error);
  EXPECT_GE(hi, mc.value - 3 * mc.std_error);
}

TEST(CmdProb, TinyProbabilitiesKeepTheirLogs) {
  std::ostringstream out;
  RunConfig cfg;
  ASSERT_EQ(cmd_prob(weights({100, 200}), "1e-300", cfg, out), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  const BigReal lo = BigReal::parse(j["lo"].get<std::string>());
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(j["log_lo"].get<double>(), -600);
  EXPECT_NEAR(j["log_lo"].get<double>(), lo.log_abs(), 1e-9);
}

TEST(CmdWeights, CsvMatchesLibrary) {
  std::ostringstream out;
  RunConfig cfg;
  ASSERT_EQ(cmd_weights(5, cfg, out), kExitOk);
  expect_csv(out.str(), "b_prime,lambda_sq,weight");
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 5u);
  const MpWeights mp = mp_quantile_weights(5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    EXPECT_EQ(std::stoi(f[0]), static_cast<int>(i + 1));
    EXPECT_NEAR(std::stod(f[2]), mp.weights[i - 1].to_double(), 1e-18);
  }
}

TEST(CmdVacuaSweep, TwentyNineMonotoneRowsAndBothFits) {
  TempDir dir("sweep");
  RunConfig cfg;
  cfg.output_path = dir.path().string();
  std::ostringstream log;
  ASSERT_EQ(cmd_vacua_sweep(2, 30, 1, cfg, log), kExitOk);
  const std::string csv = slurp(dir.path() / "sweep.csv");
  expect_csv(csv, "N,log_p_lo,log_p_hi,rel_err,seconds");
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 30u);
  double prev = 1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    EXPECT_EQ(std::stoi(f[0]), static_cast<int>(i + 1));
    const double mid = 0.5 * (std::stod(f[1]) + std::stod(f[2]));
    EXPECT_LT(mid, prev) << rows[i];
    EXPECT_LE(std::stod(f[3]), cfg.R_max);
    prev = mid;
  }
  const auto fit = nlohmann::json::parse(slurp(dir.path() / "fit.json"));
  ASSERT_TRUE(fit.contains("POWER"));
  ASSERT_TRUE(fit.contains("LINLOG"));
  EXPECT_TRUE(fit["POWER"]["params"].contains("p"));
  EXPECT_TRUE(fit["LINLOG"]["params"].contains("d"));
  EXPECT_TRUE(fit["failures"].empty());
}

TEST(CmdVacuaSweep, ReproducibleWithoutTiming) {
  TempDir a("rep_a"), b("rep_b");
  RunConfig cfg;
  cfg.timing = false;
  std::ostringstream log;
  cfg.output_path = a.path().string();
  ASSERT_EQ(cmd_vacua_sweep(2, 12, 2, cfg, log), kExitOk);
  cfg.output_path = b.path().string();
  cfg.jobs = 1;
  ASSERT_EQ(cmd_vacua_sweep(2, 12, 2, cfg, log), kExitOk);
  EXPECT_EQ(slurp(a.path() / "sweep.csv"), slurp(b.path() / "sweep.csv"));
  EXPECT_EQ(slurp(a.path() / "fit.json"), slurp(b.path() / "fit.json"));
}

TEST(CmdVacuaSweep, InterruptedSweepIsPartial) {
  TempDir dir("stop");
  RunConfig cfg;
  cfg.output_path = dir.path().string();
  std::atomic<bool> stop{true};
  std::ostringstream log;
  EXPECT_EQ(cmd_vacua_sweep(2, 6, 1, cfg, log, &stop), kExitPartial);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "sweep.csv"));
  EXPECT_NE(log.str().find("interrupted"), std::string::npos);
  EXPECT_THROW(cmd_vacua_sweep(5, 4, 1, cfg, log), DomainError);
  EXPECT_THROW(cmd_vacua_sweep(1, 4, 1, cfg, log), DomainError);
}

TEST(CmdOracle, SameSeedSameBytes) {
  RunConfig cfg;
  cfg.seed = 9;
  std::ostringstream a, b;
  ASSERT_EQ(cmd_oracle(weights({1, 2, 3}), {"0.5", "2"}, 100'000, 0.02, cfg, a), kExitOk);
  cfg.jobs = 1;
  ASSERT_EQ(cmd_oracle(weights({1, 2, 3}), {"0.5", "2"}, 100'000, 0.02, cfg, b), kExitOk);
  EXPECT_EQ(a.str(), b.str());
  expect_csv(a.str(), "x,mc,mc_err,quad,lo,hi");
  cfg.seed = 10;
  std::ostringstream c;
  cmd_oracle(weights({1, 2, 3}), {"0.5", "2"}, 100'000, 0.02, cfg, c);
  EXPECT_NE(a.str(), c.str());
}

TEST(CmdOracle, QuadColumnBlankAboveEightWeights) {
  RunConfig cfg;
  std::ostringstream out;
  ASSERT_EQ(cmd_oracle(weights({1, 1.2, 1.4, 1.6, 1.8, 2, 2.2, 2.4, 2.6}), {"10"}, 10'000, 0.1, cfg, out), kExitOk);
  EXPECT_EQ(fields(lines(out.str())[1])[3], "");
}

TEST(CmdBench, TermsObeyTheRateTimesDegreeBound) {
  RunConfig cfg;
  cfg.timing = false;
  std::ostringstream out, log;
  const std::vector<int> ns{4, 8, 16};
  ASSERT_EQ(cmd_bench(ns, cfg, out, log), kExitOk);
  expect_csv(out.str(), "n,seconds,terms");
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), ns.size() + 1);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto f = fields(rows[i + 1]);
    EXPECT_EQ(f[1], "0");
    const auto mp = mp_quantile_weights(ns[i] + 1).weights;
    const auto d = build(make_weight_list(mp, 1), BigReal(kSweepXMax), BigReal(cfg.R_max));
    const auto terms = static_cast<std::size_t>(std::stoul(f[2]));
    EXPECT_EQ(terms, d.upper.term_count());
    EXPECT_LE(d.upper.rate_count(), static_cast<std::size_t>(ns[i]));
    EXPECT_LE(terms, d.upper.rate_count() * (d.upper.max_power() + 1));
  }
  EXPECT_NE(log.str().find("log-log slope"), std::string::npos);
}

TEST(CmdBench, SingleSizeGivesOneRow) {
  RunConfig cfg;
  std::ostringstream out, log;
  ASSERT_EQ(cmd_bench({6}, cfg, out, log), kExitOk);
  EXPECT_EQ(lines(out.str()).size(), 2u);
  EXPECT_THROW(cmd_bench({8, 4}, cfg, out, log), DomainError);
}

TEST(CmdFullMass, JsonFields) {
  RunConfig cfg;
  cfg.grid_step = 0.02;
  std::ostringstream out;
  ASSERT_EQ(cmd_full_mass(4, cfg, out), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["N"], 4);
  EXPECT_EQ(j["certified"], false);
  EXPECT_GT(j["value"].get<double>(), 0);
  EXPECT_LT(j["value"].get<double>(), 1);
}

TEST(LogLogSlope, RecoversPowerLaw) {
  EXPECT_NEAR(loglog_slope({10, 20, 40}, {1, 4, 16}), 2.0, 1e-12);
  EXPECT_EQ(loglog_slope({10}, {1}), 0);
}
