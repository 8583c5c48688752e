#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dhcosim/runner/scenario.hpp"

namespace dhcosim::runner {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,     // schema or wiring problem
  kExitRuntime = 3,     // a module failed while running
  kExitInfeasible = 4,  // the optimizer proved a window infeasible
};

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  std::optional<std::uint64_t> seed;
  std::optional<double> gap_tol;
  std::vector<int> multipliers;  // convergence; empty means from the file
};

struct RunReport {
  std::string scenario_hash;
  std::string variant;
  std::uint64_t seed = kDefaultSeed;
  engine::RunResults results;
  std::vector<std::string> probes;  // empty means every recorded slot
  std::optional<plants::KpiReport> kpi;
  mpc::Diagnostics diagnostics;
  plants::ViolationLog violations;
  double build_s = 0.0;
  double run_s = 0.0;
};

// Builds and runs one variant. With require_mpc the scenario must contain an
// MPC module. Runtime failures propagate as engine::ModuleStepFailure.
RunReport execute(const Scenario& s, const CommandOptions& opt, bool require_mpc,
                  const std::filesystem::path& dump_dir);

// Writes report.json, kpi.csv, diagnostics.csv, violations.csv and one CSV per
// probe under series/. Everything except the timing fields of report.json and
// diagnostics.csv is byte-identical between reruns.
void write_run_outputs(const RunReport& r, const std::filesystem::path& dir);

struct CompareRow {
  std::string variant;
  plants::KpiReport kpi;
};

struct CompareReport {
  std::string scenario_hash;
  std::vector<CompareRow> rows;  // first row is the reference
};

void write_compare_outputs(const CompareReport& c, const std::filesystem::path& dir);

struct BenchmarkRow {
  std::string name;
  double seconds = 0.0;
  int vars = 0;
  int binaries = 0;
  int rows = 0;
  long nonzeros = 0;
  std::string note;
};

// Formulation and solve timings: a 10k-variable generic build, one
// scenario-B 96-step window and one winter scenario-A 48 h window.
std::vector<BenchmarkRow> run_benchmark();
std::string format_benchmark(const std::vector<BenchmarkRow>& rows);

// Generic sparse LP with `n_vars` variables and `n_nonzeros` constraint
// coefficients, built through the public modelling API.
milp::MilpProblem build_large_problem(int n_vars, int n_nonzeros);

// Directory for a scenario's outputs: --out, then output.dir, then "out".
std::filesystem::path output_dir(const Scenario& s, const CommandOptions& opt);

// Subcommands. Each returns the process exit code and prints a short summary;
// errors are printed to stderr as a JSON object {"errors": [...]}.
int cmd_validate(const std::filesystem::path& scenario, const CommandOptions& opt);
int cmd_run(const std::filesystem::path& scenario, const CommandOptions& opt);
int cmd_mpc(const std::filesystem::path& scenario, const CommandOptions& opt);
int cmd_compare(const std::filesystem::path& scenario, const CommandOptions& opt);
int cmd_convergence(const std::filesystem::path& scenario, const CommandOptions& opt);
int cmd_benchmark(const CommandOptions& opt);

}  // namespace dhcosim::runner
