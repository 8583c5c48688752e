#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dhcosim/runner/commands.hpp"

using namespace dhcosim;
using namespace dhcosim::runner;
using nlohmann::json;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(DHCOSIM_SOURCE_DIR) / "scenarios";

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "dhcosim_runner_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Two spring days of scenario A under MPC, with no variants.
json spring_days() {
  json doc = json::parse(slurp(kScenarios / "scenario_a_week.json"));
  doc["engine"]["duration"] = 2 * 86400;
  doc.erase("variants");
  doc.erase("compare");
  doc["output"].erase("dir");
  return doc;
}

Scenario from_json(const json& doc, const std::filesystem::path& base = ".") {
  return parse_scenario(doc.dump(), base);
}

std::filesystem::path write_json(const std::filesystem::path& dir, const json& doc) {
  auto p = dir / "scenario.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

bool has_issue(const std::vector<Issue>& issues, const std::string& code, const std::string& text) {
  for (const auto& i : issues) {
    if (i.code == code && (i.where + " " + i.message).find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("FNV-1a matches the published 64-bit test vectors") {
  CHECK(hash_hex(fnv1a("")) == "cbf29ce484222325");
  CHECK(hash_hex(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hash_hex(fnv1a("foobar")) == "85944171f73967e8");
  CHECK(parse_scenario(R"({"a": 1})", ".").hash == hash_hex(fnv1a(R"({"a": 1})")));
}

TEST_CASE("bundled scenarios validate") {
  for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const auto issues = validate(load_scenario(entry.path()));
    for (const auto& i : issues) MESSAGE(i.code << " " << i.where << " " << i.message);
    CHECK(issues.empty());
  }
}

TEST_CASE("a consumer wired to a missing slot is reported by name") {
  json doc = spring_days();
  doc["wiring"]["plant.Pb"] = "mpc.nonexistent";
  const auto issues = validate(from_json(doc));
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "WiringError");
  CHECK(issues[0].message.find("mpc.nonexistent") != std::string::npos);
  CHECK_THROWS_AS(build(from_json(doc)), ScenarioInvalid);
}

TEST_CASE("schema problems are collected, not just the first") {
  json doc = spring_days();
  doc["modules"]["plant"]["params"]["storage_capcity_mwh"] = 1.0;
  doc["modules"]["mpc"]["type"] = "mcp";
  doc["data"]["extra"] = {{"csv", "does_not_exist.csv"}};
  doc.erase("engine");
  doc["sequences"][0]["modules"] = {"mpc", "ghost"};
  const auto issues = validate(from_json(doc));
  CHECK(has_issue(issues, "UnknownField", "storage_capcity_mwh"));
  CHECK(has_issue(issues, "InvalidValue", "mcp"));
  CHECK(has_issue(issues, "MissingFile", "does_not_exist.csv"));
  CHECK(has_issue(issues, "MissingField", "engine"));
  CHECK(has_issue(issues, "UnknownModule", "ghost"));

  json bad_param = spring_days();
  bad_param["modules"]["plant"]["params"]["biomass_min_fraction"] = 1.5;
  CHECK(has_issue(validate(from_json(bad_param)), "InvalidArgument", "modules.plant.params"));

  CHECK_THROWS_AS(parse_scenario("{not json", "."), ScenarioInvalid);
  CHECK_THROWS_AS(parse_scenario("[1, 2]", "."), ScenarioInvalid);
}

TEST_CASE("variants are merge patches over the base document") {
  const Scenario s = load_scenario(kScenarios / "scenario_a.json");
  CHECK(variant_names(s) == std::vector<std::string>{"no_storage", "rbc"});

  const Scenario ns = with_variant(s, "no_storage");
  CHECK(ns.doc["modules"]["plant"]["params"]["storage_capacity_mwh"] == 0.0);
  CHECK(ns.doc["modules"]["plant"]["params"]["stop_spacing_h"] == 10);  // untouched sibling
  CHECK(ns.hash == s.hash);
  CHECK(ns.variant == "no_storage");

  const Scenario rbc = with_variant(s, "rbc");
  CHECK_FALSE(rbc.doc["modules"].contains("mpc"));  // null deletes
  CHECK_FALSE(rbc.doc["wiring"].contains("mpc.E"));
  CHECK(rbc.doc["wiring"]["plant.u"] == "rbc.u");
  CHECK_FALSE(rbc.doc.contains("variants"));

  CHECK_THROWS_AS(with_variant(s, "nope"), ScenarioInvalid);
  json doc = s.doc;
  doc["compare"] = {"base", "nope"};
  CHECK(has_issue(validate(from_json(doc, kScenarios)), "UnknownVariant", "nope"));
}

TEST_CASE("variant problems are reported with the variant name") {
  json doc = spring_days();
  doc["variants"]["broken"] = {{"modules", {{"plant", {{"load", "missing_series"}}}}}};
  const auto issues = validate(from_json(doc));
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "UnknownData");
  CHECK(issues[0].where.find("variant broken") == 0);
}

TEST_CASE("seeds come from the file, default to a constant, and can be overridden") {
  json doc = spring_days();
  doc.erase("seed");
  auto defaulted = execute(from_json(doc), {}, true, scratch("seed_default"));
  doc["seed"] = static_cast<int>(kDefaultSeed);
  auto explicit_seed = execute(from_json(doc), {}, true, scratch("seed_explicit"));
  CHECK(defaulted.results == explicit_seed.results);

  CommandOptions other;
  other.seed = 7;
  auto reseeded = execute(from_json(doc), other, true, scratch("seed_other"));
  CHECK(reseeded.seed == 7);
  CHECK(reseeded.results.at("plant.load").values != explicit_seed.results.at("plant.load").values);

  // A generator with its own seed ignores the scenario seed.
  doc["data"]["load"]["seed"] = 11;
  auto pinned_a = execute(from_json(doc), {}, true, scratch("seed_pinned_a"));
  auto pinned_b = execute(from_json(doc), other, true, scratch("seed_pinned_b"));
  CHECK(pinned_a.results.at("plant.load") == pinned_b.results.at("plant.load"));
}

TEST_CASE("every MPC iteration appears exactly once in the diagnostics") {
  const auto rep = execute(from_json(spring_days()), {}, true, scratch("diag"));
  REQUIRE(rep.kpi.has_value());
  REQUIRE(rep.diagnostics.records.size() == 2);
  std::set<Seconds> times;
  for (const auto& d : rep.diagnostics.records) times.insert(d.time);
  CHECK(times.size() == 2);
  CHECK(*times.begin() == 99 * 86400);
  CHECK(*times.rbegin() == 100 * 86400);
  CHECK(rep.kpi->mpc_iterations == 2);
  CHECK(rep.kpi->steps == 48);
  CHECK(rep.kpi->violation_steps == 0);
}

TEST_CASE("running a scenario twice gives byte-identical result CSVs") {
  const auto dir = scratch("determinism");
  const auto path = write_json(dir, spring_days());
  CommandOptions a, b;
  a.out_dir = dir / "a";
  b.out_dir = dir / "b";
  REQUIRE(cmd_mpc(path, a) == kExitOk);
  REQUIRE(cmd_mpc(path, b) == kExitOk);

  int compared = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "a" / "series")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / "series" / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 8);
  CHECK(slurp(dir / "a" / "kpi.csv") == slurp(dir / "b" / "kpi.csv"));
  CHECK(slurp(dir / "a" / "violations.csv") == slurp(dir / "b" / "violations.csv"));

  const json report = json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["scenario_hash"] == hash_hex(fnv1a(slurp(path))));
  CHECK(report["mpc_iterations"] == 2);
  CHECK(report["kpi"]["steps"] == 48);
  CHECK(report["runtime_s"].contains("solve"));
}

TEST_CASE("exit codes distinguish validation, runtime and infeasibility") {
  const auto dir = scratch("exit_codes");

  json bad = spring_days();
  bad["wiring"]["mpc.E"] = "plant.nothing";
  CHECK(cmd_validate(write_json(dir, bad), {}) == kExitInvalid);
  CHECK(cmd_run(write_json(dir, bad), {}) == kExitInvalid);
  CHECK(cmd_validate(dir / "missing.json", {}) == kExitInvalid);

  // The mpc command needs an MPC module.
  json rbc = json::parse(slurp(kScenarios / "scenario_a_week.json"));
  rbc["engine"]["duration"] = 86400;
  rbc.merge_patch(rbc["variants"]["rbc"]);
  rbc.erase("variants");
  rbc.erase("compare");
  CommandOptions opt;
  opt.out_dir = dir / "rbc";
  CHECK(cmd_mpc(write_json(dir, rbc), opt) == kExitInvalid);
  CHECK(cmd_run(write_json(dir, rbc), opt) == kExitOk);

  // Boilers too small for the load: the first window is infeasible and its
  // model is dumped next to the outputs.
  json inf = spring_days();
  inf["modules"]["plant"]["params"]["gas_max_mw"] = 0.5;
  inf["modules"]["plant"]["params"]["biomass_max_mw"] = 0.5;
  opt.out_dir = dir / "infeasible";
  CHECK(cmd_mpc(write_json(dir, inf), opt) == kExitInfeasible);
  bool dumped = false;
  for (const auto& e : std::filesystem::directory_iterator(dir / "infeasible")) {
    dumped = dumped || e.path().extension() == ".lp";
  }
  CHECK(dumped);

  // Data that ends before the run does is a runtime failure.
  json short_data = spring_days();
  short_data["data"]["load"]["n_steps"] = 24 * 99 + 12;
  short_data["modules"]["mpc"]["cyclic"] = false;
  opt.out_dir = dir / "short";
  CHECK(cmd_mpc(write_json(dir, short_data), opt) == kExitRuntime);
}

TEST_CASE("compare runs the listed variants on identical data") {
  json doc = json::parse(slurp(kScenarios / "scenario_a_week.json"));
  doc["engine"]["duration"] = 3 * 86400;
  doc["compare"] = {"no_storage", "base"};
  const auto dir = scratch("compare");
  CommandOptions opt;
  opt.out_dir = dir;
  REQUIRE(cmd_compare(write_json(dir, doc), opt) == kExitOk);

  const json c = json::parse(slurp(dir / "compare.json"));
  CHECK(c["reference"] == "no_storage");
  const json& with = c["variants"]["base"];
  const json& without = c["variants"]["no_storage"];
  CHECK(with["load_mwh"] == without["load_mwh"]);
  CHECK(with["biomass_share"].get<double>() > without["biomass_share"].get<double>());

  const std::string csv = slurp(dir / "compare.csv");
  CHECK(csv.rfind("kpi,no_storage,base,delta_base\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "base" / "series" / "plant.Pb.csv"));
  CHECK(std::filesystem::exists(dir / "no_storage" / "report.json"));

  json single = spring_days();
  CHECK(cmd_compare(write_json(dir, single), opt) == kExitInvalid);
}

TEST_CASE("convergence command writes finals per coupling period") {
  const auto dir = scratch("convergence");
  CommandOptions opt;
  opt.out_dir = dir;
  opt.multipliers = {8, 4, 2, 1};
  REQUIRE(cmd_convergence(kScenarios / "two_lag.json", opt) == kExitOk);
  const json j = json::parse(slurp(dir / "convergence.json"));
  CHECK(j["multipliers"] == json({8, 4, 2, 1}));
  for (const char* slot : {"x1.y", "x2.y"}) {
    const auto d = j["differences"][slot].get<std::vector<double>>();
    REQUIRE(d.size() == 3);
    CHECK(d[1] < d[0]);
    CHECK(d[2] < d[1]);
  }
  const std::string csv = slurp(dir / "convergence.csv");
  CHECK(csv.rfind("multiplier,coupling_period_s,x1.y,x2.y\n8,8,", 0) == 0);
}

TEST_CASE("benchmark reports the formulation sizes") {
  const auto rows = run_benchmark();
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].vars == 10'000);
  CHECK(rows[0].nonzeros == 20'000);
  CHECK(rows[1].binaries == 288);
  CHECK(rows[2].note.find("optimal") != std::string::npos);
  CHECK(rows[4].note.find("optimal") != std::string::npos);
  CHECK(format_benchmark(rows).find("build_10k_vars") != std::string::npos);
}
