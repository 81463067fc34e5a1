#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include "chisum/commands.hpp"
#include "chisum/errors.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace chisum;
  RunConfig cfg;
  if (const char* env = std::getenv("CHISUM_PRECISION_BITS")) {
    try {
      cfg.precision_bits = std::stol(env);
    } catch (const std::exception&) {
      std::cerr << "CHISUM_PRECISION_BITS is not an integer: " << env << '\n';
      return kExitUsage;
    }
  }

  CLI::App app{"Certified densities and tail probabilities of positive chi-square combinations"};
  app.require_subcommand(1);
  app.fallthrough();
  double x_max = 0;
  bool no_timing = false;
  app.add_option("--precision", cfg.precision_bits, "working precision in bits")->check(CLI::Range(64L, 1L << 20));
  app.add_option("--rmax", cfg.R_max, "relative error budget R_max")->check(CLI::Range(1e-300, 0.999999));
  auto* xmax_opt = app.add_option("--xmax", x_max, "upper end of the certified range")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Monte Carlo seed");
  app.add_option("--grid", cfg.grid_step, "grid step for numeric convolution")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.output_path, "output file (directory for vacua-sweep)");
  app.add_option("--jobs", cfg.jobs, "worker threads (0 = all cores)");
  app.add_option("--dof", cfg.dof, "degrees of freedom of each chi-square")->check(CLI::PositiveNumber);
  app.add_flag("--no-timing", no_timing, "write 0 for wall times so output is reproducible");

  std::vector<std::string> weights, xs;
  int mp_N = 0;
  auto add_weights = [&](CLI::App* sub) {
    sub->add_option("-w,--weights", weights, "comma-separated positive weights")->delimiter(',')
        ->allow_extra_args(false);
    sub->add_option("--mp", mp_N, "use the Marchenko-Pastur weights for this N");
  };

  auto* density = app.add_subcommand("density", "certified density bounds, CSV x,lo,hi");
  add_weights(density);
  density->add_option("-x", xs, "comma-separated abscissae")->delimiter(',')->required();

  std::string t;
  auto* prob = app.add_subcommand("prob", "certified bounds on P(Z <= t), JSON");
  add_weights(prob);
  prob->add_option("-t", t, "threshold")->required();

  int N_min = 2, N_max = 30, step = 1;
  auto* vacua = app.add_subcommand("vacua-sweep", "P_N sweep to sweep.csv and fit.json");
  vacua->add_option("N_min", N_min)->required();
  vacua->add_option("N_max", N_max)->required();
  vacua->add_option("step", step);

  std::vector<int> n_list;
  auto* bench = app.add_subcommand("bench", "build + CDF timing, CSV n,seconds,terms");
  bench->add_option("n", n_list, "ascending sizes")->required()->delimiter(',');

  long samples = 10'000'000;
  double bandwidth = 0.01;
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo and quadrature next to certified bounds");
  add_weights(oracle);
  oracle->add_option("-x", xs, "comma-separated abscissae")->delimiter(',')->required();
  oracle->add_option("--samples", samples)->check(CLI::Range(10'000L, 1L << 40));
  oracle->add_option("--bandwidth", bandwidth)->check(CLI::PositiveNumber);

  int weights_N = 0;
  auto* weights_cmd = app.add_subcommand("weights", "Marchenko-Pastur weights, CSV b_prime,lambda_sq,weight");
  weights_cmd->add_option("N", weights_N)->required()->check(CLI::Range(2, 1 << 20));

  int full_N = 0;
  auto* full = app.add_subcommand("full-mass", "P(S <= T) by numeric convolution (uncertified), JSON");
  full->add_option("N", full_N)->required()->check(CLI::Range(2, 1 << 20));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*xmax_opt) cfg.x_max = x_max;
  cfg.timing = !no_timing;

  std::unique_ptr<std::ofstream> file;
  std::ostream* out = &std::cout;
  const bool file_output = !cfg.output_path.empty() && !vacua->parsed();
  if (file_output) {
    file = std::make_unique<std::ofstream>(cfg.output_path, std::ios::binary);
    if (!*file) {
      std::cerr << "cannot open " << cfg.output_path << " for writing\n";
      return kExitUsage;
    }
    out = file.get();
  }

  try {
    set_default_precision(cfg.precision_bits);
    if (density->parsed())
      return cmd_density(resolve_weights(weights, mp_N, cfg.precision_bits), xs, cfg, *out);
    if (prob->parsed()) return cmd_prob(resolve_weights(weights, mp_N, cfg.precision_bits), t, cfg, *out);
    if (vacua->parsed()) {
      std::signal(SIGINT, on_interrupt);
      std::signal(SIGTERM, on_interrupt);
      return cmd_vacua_sweep(N_min, N_max, step, cfg, std::cerr, &g_stop);
    }
    if (bench->parsed()) return cmd_bench(n_list, cfg, *out, std::cerr);
    if (oracle->parsed())
      return cmd_oracle(resolve_weights(weights, mp_N, cfg.precision_bits), xs, samples, bandwidth, cfg, *out);
    if (weights_cmd->parsed()) return cmd_weights(weights_N, cfg, *out);
    if (full->parsed()) return cmd_full_mass(full_N, cfg, *out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
