#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dhcosim/core/errors.hpp"
#include "dhcosim/engine/engine.hpp"
#include "dhcosim/mpc/mpc.hpp"
#include "dhcosim/plants/kpi.hpp"
#include "dhcosim/plants/scenario_a.hpp"

namespace dhcosim::runner {

// Seed used by generators when neither the scenario nor the command line
// provides one.
constexpr std::uint64_t kDefaultSeed = 1;

struct Issue {
  std::string code;   // stable identifier, e.g. "MissingField"
  std::string where;  // JSON path or module id
  std::string message;
};

// Raised when a scenario cannot be used. Carries every problem found, not
// just the first.
class ScenarioInvalid : public Error {
 public:
  explicit ScenarioInvalid(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const { return issues_; }

 private:
  std::vector<Issue> issues_;
};

// 64-bit FNV-1a, printed as 16 lowercase hex digits.
std::uint64_t fnv1a(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

struct Scenario {
  nlohmann::json doc;
  std::filesystem::path base_dir;  // relative data paths resolve against it
  std::string hash;                // of the file content as read
  std::string variant = "base";
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir);

// Names of the declared variants, in file order of the JSON object (sorted).
std::vector<std::string> variant_names(const Scenario& s);

// The scenario with the named variant merged in (RFC 7386 merge patch).
// "base" returns the scenario unchanged.
Scenario with_variant(const Scenario& s, const std::string& name);

struct BuildOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::optional<double> gap_tol;      // overrides solver.gap_tol
  std::filesystem::path dump_dir = ".";
};

// Everything needed to run a scenario and turn its results into reports.
struct BuiltScenario {
  engine::Simulation sim;
  std::vector<std::string> probes;
  std::shared_ptr<mpc::Diagnostics> diagnostics;  // null without an MPC module
  std::shared_ptr<plants::ViolationLog> violations;
  std::optional<plants::KpiInputs> kpi;  // set when the scenario has one plant
  bool has_mpc = false;
  std::vector<int> convergence_multipliers;
};

// Schema, data and wiring checks. An empty list means the scenario and all
// its variants can be built and run.
std::vector<Issue> validate(const Scenario& s, const BuildOptions& opt = {});

// Throws ScenarioInvalid on any schema problem.
BuiltScenario build(const Scenario& s, const BuildOptions& opt = {});

}  // namespace dhcosim::runner
