#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ddc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Data-driven resilient control under switched FDI attacks"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", param, values, log_dir;
  std::optional<std::uint64_t> seed;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run = app.add_subcommand("run", "Run a scenario (config file or preset name)");
  run->add_option("config", config, "YAML config or preset (power-generator, power-generator-zoh, f404)")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override run.seed");

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a list of values");
  sweep->add_option("config", config, "YAML config or preset")->required();
  sweep->add_option("--param", param, "eps1, eps2, delta, tau, upsilon, noise_floor or seed")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Re-run invariant audits on a run directory");
  verify->add_option("logdir", log_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ddc::kExitInvalidConfig;
  }
  if (run->parsed()) return ddc::cmd_run(config, out_dir, seed, std::cout, std::cerr);
  if (sweep->parsed()) return ddc::cmd_sweep(config, param, values, out_dir, workers, std::cout, std::cerr);
  return ddc::cmd_verify(log_dir, std::cout, std::cerr);
}
