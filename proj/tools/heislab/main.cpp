#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "heislab/scenario.hpp"

namespace {

void print_diagnostics(const std::vector<heislab::Diagnostic>& diags, const std::string& file) {
  for (const auto& d : diags) {
    std::cerr << file;
    if (d.line > 0) std::cerr << ":" << d.line;
    std::cerr << ": " << (d.severity == heislab::Diagnostic::Severity::error ? "error" : "warning") << ": "
              << d.message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heislab: numerical experiments for weights on the Heisenberg group"};
  app.require_subcommand(1);

  std::string run_config;
  std::string out_dir = "heislab-out";
  if (const char* env = std::getenv("HEISLAB_OUT_DIR"); env && *env) out_dir = env;
  int workers = 1;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run every experiment of a scenario config");
  run->add_option("config", run_config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output root (default $HEISLAB_OUT_DIR or heislab-out)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1, 1024));
  auto* seed_opt = run->add_option("--seed", seed, "Override the global seed");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Check a scenario config without running it");
  validate->add_option("config", validate_config, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : heislab::kExitConfig;
  }

  if (*validate) {
    const auto res = heislab::validate_config_file(validate_config);
    print_diagnostics(res.diagnostics, validate_config);
    if (!res.ok()) return heislab::kExitConfig;
    std::cout << validate_config << ": ok\n";
    return heislab::kExitOk;
  }

  heislab::RunOptions opt;
  opt.out_dir = out_dir;
  opt.workers = workers;
  if (*seed_opt) opt.seed = seed;
  const auto out = heislab::run_config_file(run_config, opt);
  print_diagnostics(out.diagnostics, run_config);
  if (out.exit_code == heislab::kExitConfig) return out.exit_code;
  for (const auto& e : out.experiments) {
    std::cout << e.status << "  " << e.id << " (" << e.type << ")";
    if (e.assertions) std::cout << "  " << (e.assertions - e.failed) << "/" << e.assertions << " assertions";
    std::cout << "\n";
    if (!e.error.empty()) std::cout << "    " << e.error << "\n";
  }
  std::cout << "scenario " << out.scenario_id << " [" << out.scenario_hash << "] -> " << out.output_dir.string()
            << "\n";
  return out.exit_code;
}
