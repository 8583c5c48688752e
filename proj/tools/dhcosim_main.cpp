// Command-line front end:
//   dhcosim validate|run|mpc|compare|convergence <scenario.json> [options]
//   dhcosim benchmark [scenario.json] [--out DIR]

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "dhcosim/runner/commands.hpp"

namespace {

using dhcosim::runner::CommandOptions;

struct Args {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  double gap = -1.0;
  std::vector<int> multipliers;
};

void add_common(CLI::App* cmd, Args& a, bool scenario_required) {
  auto* s = cmd->add_option("scenario", a.scenario, "Scenario file (JSON)");
  if (scenario_required) s->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output directory (default: output.dir of the scenario)");
  cmd->add_option("--seed", a.seed, "Override the scenario seed");
  cmd->add_option("--gap", a.gap, "Absolute MILP gap tolerance in EUR")->check(CLI::NonNegativeNumber);
}

CommandOptions to_options(const Args& a, const CLI::App* cmd) {
  CommandOptions opt;
  if (!a.out.empty()) opt.out_dir = a.out;
  if (cmd->count("--seed") > 0) opt.seed = a.seed;
  if (cmd->count("--gap") > 0) opt.gap_tol = a.gap;
  opt.multipliers = a.multipliers;
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"District-heating co-simulation and MPC runner"};
  app.require_subcommand(1);
  Args a;

  auto* validate = app.add_subcommand("validate", "Check a scenario's schema, data and wiring");
  auto* run = app.add_subcommand("run", "Run a scenario as written (RBC or open loop)");
  auto* mpc = app.add_subcommand("mpc", "Run a scenario that contains an MPC module");
  auto* compare = app.add_subcommand("compare", "Run the scenario's variants and report KPI deltas");
  auto* convergence = app.add_subcommand("convergence", "Repeat a run at coarser coupling periods");
  auto* benchmark = app.add_subcommand("benchmark", "Time formulation and window solves");
  for (auto* cmd : {validate, run, mpc, compare, convergence}) add_common(cmd, a, true);
  add_common(benchmark, a, false);
  convergence->add_option("--multipliers", a.multipliers, "Coupling multipliers, e.g. 8 4 2 1")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dhcosim::runner::kExitInvalid;
  }

  namespace r = dhcosim::runner;
  if (*validate) return r::cmd_validate(a.scenario, to_options(a, validate));
  if (*run) return r::cmd_run(a.scenario, to_options(a, run));
  if (*mpc) return r::cmd_mpc(a.scenario, to_options(a, mpc));
  if (*compare) return r::cmd_compare(a.scenario, to_options(a, compare));
  if (*convergence) return r::cmd_convergence(a.scenario, to_options(a, convergence));
  return r::cmd_benchmark(to_options(a, benchmark));
}
