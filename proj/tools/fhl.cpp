#include <chrono>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "fhl/cli.hpp"
#include "fhl/parallel.hpp"

namespace {

using Command = fhl::cli::CommandResult (*)(const fhl::cli::ExperimentConfig&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupling, Girsanov and Harnack checks for SDEs driven by fractional Brownian motion"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;

  const std::map<std::string, std::pair<Command, const char*>> commands{
      {"constants", {&fhl::cli::cmd_constants, "Print the constants bundle of the entropy bound"}},
      {"verify", {&fhl::cli::cmd_verify, "Run the selected Monte Carlo checks"}},
      {"invariant", {&fhl::cli::cmd_invariant, "Krylov-Bogoliubov measure, invariance and entropy-cost"}},
      {"sample", {&fhl::cli::cmd_sample, "Sample one fBm path and the solution driven by it"}},
      {"couple", {&fhl::cli::cmd_couple, "Run one coupled trace and its Girsanov density"}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Master seed (overrides run.seed)");
    sub->add_option("--jobs", jobs, "Worker threads (default: FHL_JOBS, else 1)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fhl::cli::kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const Command command = commands.at(chosen->get_name()).first;
  if (jobs) fhl::set_default_jobs(*jobs);

  try {
    fhl::cli::ExperimentConfig cfg = fhl::cli::load_config(config_path);
    if (seed) cfg.run.seed = *seed;
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    const auto start = std::chrono::steady_clock::now();
    const fhl::cli::CommandResult result = command(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fhl::cli::dump_report(result.report);
    std::cerr << chosen->get_name() << ": exit " << result.exit_code << ", wall-clock " << seconds << " s\n";
    return result.exit_code;
  } catch (const fhl::cli::ConfigError& e) {
    std::cerr << "config rejected:\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << '\n';
    return fhl::cli::kExitUsage;
  } catch (const fhl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fhl::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
