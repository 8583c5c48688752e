#include "dhcosim/runner/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "dhcosim/plants/scenario_b.hpp"
#include "dhcosim/plants/synthetic.hpp"

namespace dhcosim::runner {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json issues_json(const std::vector<Issue>& issues) {
  json list = json::array();
  for (const Issue& i : issues) list.push_back({{"code", i.code}, {"where", i.where}, {"message", i.message}});
  return list;
}

void print_errors(const json& list) { std::cerr << json{{"errors", list}}.dump(2) << "\n"; }

// Maps an exception to its exit code and reports it on stderr.
int report_failure(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ScenarioInvalid& e) {
    print_errors(issues_json(e.issues()));
    return kExitInvalid;
  } catch (const engine::ModuleStepFailure& e) {
    print_errors(json::array({{{"code", e.inner_code()},
                               {"module", e.module()},
                               {"tick", e.tick()},
                               {"message", e.what()}}}));
    return e.inner_code() == "InfeasibleProblem" ? kExitInfeasible : kExitRuntime;
  } catch (const mpc::InfeasibleProblem& e) {
    print_errors(json::array({{{"code", e.code()}, {"message", e.what()}}}));
    return kExitInfeasible;
  } catch (const Error& e) {
    print_errors(json::array({{{"code", e.code()}, {"message", e.what()}}}));
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_errors(json::array({{{"code", "InternalError"}, {"message", e.what()}}}));
    return kExitRuntime;
  }
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (...) {
    return report_failure(std::current_exception());
  }
}

std::uint64_t effective_seed(const Scenario& s, const CommandOptions& opt) {
  if (opt.seed) return *opt.seed;
  auto it = s.doc.find("seed");
  if (it != s.doc.end() && it->is_number_unsigned()) return it->get<std::uint64_t>();
  return kDefaultSeed;
}

// KPI values as JSON numbers/booleans.
json kpi_json(const plants::KpiReport& k) {
  json j = json::object();
  for (const auto& [key, value] : plants::kpi_fields(k)) {
    if (value == "true" || value == "false") {
      j[key] = value == "true";
    } else if (value.find('.') == std::string::npos) {
      j[key] = std::stoll(value);
    } else {
      j[key] = std::stod(value);
    }
  }
  return j;
}

bool is_timing(const std::string& key) { return key.find("time") != std::string::npos; }

// KPI CSV without the wall-clock fields, so reruns compare byte for byte.
void write_kpis(const std::filesystem::path& path, const plants::KpiReport& k) {
  auto out = fmt::output_file(path.string());
  out.print("kpi,value\n");
  for (const auto& [key, value] : plants::kpi_fields(k)) {
    if (!is_timing(key)) out.print("{},{}\n", key, value);
  }
}

void validate_or_throw(const Scenario& s, const CommandOptions& opt) {
  BuildOptions b;
  b.seed = opt.seed;
  b.gap_tol = opt.gap_tol;
  auto issues = validate(s, b);
  if (!issues.empty()) throw ScenarioInvalid(std::move(issues));
}

void print_kpi_summary(const std::string& label, const RunReport& r) {
  if (!r.kpi) {
    fmt::print("{}: {} ticks in {:.2f} s\n", label, r.results.ticks, r.run_s);
    return;
  }
  const auto& k = *r.kpi;
  fmt::print("{}: cost {:.2f} EUR, biomass {:.1f} MWh ({:.1f}%), violations {}, {:.2f} s\n", label,
             k.total_cost, k.biomass_mwh, 100.0 * k.biomass_share, k.violation_steps, r.run_s);
}

std::vector<std::string> compare_list(const Scenario& s) {
  std::vector<std::string> names;
  auto it = s.doc.find("compare");
  if (it != s.doc.end() && it->is_array()) {
    for (const json& n : *it) names.push_back(n.get<std::string>());
    return names;
  }
  names.push_back("base");
  for (auto& v : variant_names(s)) names.push_back(v);
  return names;
}

}  // namespace

std::filesystem::path output_dir(const Scenario& s, const CommandOptions& opt) {
  if (opt.out_dir) return *opt.out_dir;
  auto out = s.doc.find("output");
  if (out != s.doc.end() && out->is_object() && out->contains("dir") && (*out)["dir"].is_string()) {
    const std::filesystem::path p((*out)["dir"].get<std::string>());
    return p.is_absolute() ? p : s.base_dir / p;
  }
  return "out";
}

RunReport execute(const Scenario& s, const CommandOptions& opt, bool require_mpc,
                  const std::filesystem::path& dump_dir) {
  RunReport rep;
  rep.scenario_hash = s.hash;
  rep.variant = s.variant;
  rep.seed = effective_seed(s, opt);

  const auto t0 = std::chrono::steady_clock::now();
  BuildOptions b;
  b.seed = opt.seed;
  b.gap_tol = opt.gap_tol;
  b.dump_dir = dump_dir;
  BuiltScenario built = build(s, b);
  if (require_mpc && !built.has_mpc) {
    throw ScenarioInvalid({{"MissingModule", "modules", "the mpc command needs a module of type \"mpc\""}});
  }
  rep.probes = built.probes;
  rep.build_s = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  rep.results = engine::run(built.sim);
  rep.run_s = seconds_since(t1);

  if (built.diagnostics) rep.diagnostics = *built.diagnostics;
  rep.violations = *built.violations;
  if (built.kpi) {
    plants::KpiInputs in = *built.kpi;
    in.diagnostics = built.diagnostics ? &rep.diagnostics : nullptr;
    rep.kpi = plants::compute_kpis(rep.results, in);
  }
  return rep;
}

void write_run_outputs(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::vector<std::string> slots = r.probes;
  if (slots.empty()) {
    for (const auto& [name, series] : r.results.series) slots.push_back(name);
  }
  engine::write_probe_csvs(r.results, slots, dir / "series");

  if (r.kpi) write_kpis(dir / "kpi.csv", *r.kpi);
  mpc::write_diagnostics_csv(dir / "diagnostics.csv", r.diagnostics);
  {
    auto out = fmt::output_file((dir / "violations.csv").string());
    out.print("time,module,what\n");
    for (const auto& v : r.violations) out.print("{},{},\"{}\"\n", v.time, v.module, v.what);
  }

  json report = {
      {"scenario_hash", r.scenario_hash},
      {"variant", r.variant},
      {"seed", r.seed},
      {"ticks", r.results.ticks},
      {"mpc_iterations", r.diagnostics.records.size()},
      {"violations", r.violations.size()},
      {"runtime_s", {{"build", r.build_s}, {"run", r.run_s}}},
  };
  if (r.kpi) report["kpi"] = kpi_json(*r.kpi);
  if (!r.diagnostics.records.empty()) {
    double solve = 0.0, formulate = 0.0;
    for (const auto& d : r.diagnostics.records) {
      solve += d.wall_time_s;
      formulate += d.formulate_s;
    }
    report["runtime_s"]["solve"] = solve;
    report["runtime_s"]["formulate"] = formulate;
    report["problem"] = {{"vars", r.diagnostics.n_vars},
                         {"binaries", r.diagnostics.n_binaries},
                         {"rows", r.diagnostics.n_rows}};
  }
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";
}

void write_compare_outputs(const CompareReport& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto out = fmt::output_file((dir / "compare.csv").string());
  out.print("kpi");
  for (const auto& row : c.rows) out.print(",{}", row.variant);
  for (std::size_t i = 1; i < c.rows.size(); ++i) out.print(",delta_{}", c.rows[i].variant);
  out.print("\n");

  const auto ref = plants::kpi_fields(c.rows.front().kpi);
  for (std::size_t f = 0; f < ref.size(); ++f) {
    const std::string& key = ref[f].first;
    if (is_timing(key) || key.rfind("reference_", 0) == 0 || key == "meets_renewable_target") continue;
    out.print("{}", key);
    std::vector<double> vals;
    for (const auto& row : c.rows) {
      const std::string v = plants::kpi_fields(row.kpi)[f].second;
      out.print(",{}", v);
      vals.push_back(std::stod(v));
    }
    for (std::size_t i = 1; i < vals.size(); ++i) out.print(",{:.6f}", vals[i] - vals[0]);
    out.print("\n");
  }

  json j = {{"scenario_hash", c.scenario_hash}, {"reference", c.rows.front().variant}};
  for (const auto& row : c.rows) j["variants"][row.variant] = kpi_json(row.kpi);
  std::ofstream(dir / "compare.json") << j.dump(2) << "\n";
}

milp::MilpProblem build_large_problem(int n_vars, int n_nonzeros) {
  milp::MilpProblem p;
  const int per_row = 2;
  const int n_rows = n_nonzeros / per_row;
  p.reserve(n_vars, n_rows);
  std::vector<milp::VarId> v;
  v.reserve(n_vars);
  for (int i = 0; i < n_vars; ++i) v.push_back(p.add_continuous("x" + std::to_string(i), 0.0, 10.0));
  for (int r = 0; r < n_rows; ++r) {
    milp::LinExpr e;
    e.reserve(per_row);
    e.add(v[r % n_vars], 1.0).add(v[(r * 7 + 1) % n_vars], 0.5 + (r % 3));
    p.add_constraint(std::move(e), r % 2 == 0 ? milp::Sense::kLessEqual : milp::Sense::kGreaterEqual,
                     r % 2 == 0 ? 15.0 : 1.0);
  }
  milp::LinExpr obj;
  obj.reserve(n_vars);
  for (int i = 0; i < n_vars; ++i) obj.add(v[i], 1.0 + (i % 5));
  p.set_objective(std::move(obj));
  return p;
}

std::vector<BenchmarkRow> run_benchmark() {
  std::vector<BenchmarkRow> rows;

  {
    const auto t0 = std::chrono::steady_clock::now();
    auto p = build_large_problem(10'000, 20'000);
    BenchmarkRow r{"build_10k_vars", seconds_since(t0), p.num_vars(), p.num_binaries(),
                   p.num_rows(), static_cast<long>(p.num_nonzeros()), "formulation only"};
    rows.push_back(r);
  }

  // Scenario B: one 24 h window at 15 min resolution.
  {
    plants::SyntheticLoadSpec ls;
    ls.annual_mwh = 15000.0;
    ls.max_peak_mw = 8.0;
    const auto load = plants::refine_hold(plants::synthetic_load(ls), 900);
    const auto price = plants::synthetic_price(plants::PriceSpec{});
    const mpc::Horizon h{86400, 86400, 900};
    mpc::ForecastWindow fw{{"load", mpc::forecast_window("load", load, 0, 900, 96)},
                           {"price_el", mpc::forecast_window("price_el", price, 0, 900, 96)}};
    plants::FormulatorB f{plants::PlantParamsB{}};
    const mpc::StateSnapshot st{{"E", 0.0}, {"u", 0.0}, {"since_stop", 1e6}};
    auto t0 = std::chrono::steady_clock::now();
    auto form = f.formulate(st, fw, h);
    const auto& p = form.problem;
    rows.push_back({"formulate_b_96", seconds_since(t0), p.num_vars(), p.num_binaries(), p.num_rows(),
                    static_cast<long>(p.num_nonzeros()), "scenario B window"});
    t0 = std::chrono::steady_clock::now();
    milp::MilpOptions o;
    o.gap_tol = 0.5;
    auto sol = milp::solve_milp(p, o);
    rows.push_back({"solve_b_96", seconds_since(t0), p.num_vars(), p.num_binaries(), p.num_rows(),
                    static_cast<long>(p.num_nonzeros()),
                    fmt::format("{} nodes, {}", sol.nodes, milp::to_string(sol.status))});
  }

  // Scenario A: the 48 h daily problem on a mid-January day.
  {
    const auto load = plants::synthetic_load(plants::SyntheticLoadSpec{});
    const Seconds t = 14 * 86400;
    const mpc::Horizon h{86400, 2 * 86400, 3600};
    mpc::ForecastWindow fw{{"load", mpc::forecast_window("load", load, t, 3600, 48)}};
    plants::FormulatorA f{plants::PlantParamsA{}};
    const mpc::StateSnapshot st{{"E", 1.0}, {"u", 1.0}, {"since_stop", 1e6}, {"since_start", 1e6}};
    auto t0 = std::chrono::steady_clock::now();
    auto form = f.formulate(st, fw, h);
    const auto& p = form.problem;
    rows.push_back({"formulate_a_48", seconds_since(t0), p.num_vars(), p.num_binaries(), p.num_rows(),
                    static_cast<long>(p.num_nonzeros()), "scenario A daily window"});
    t0 = std::chrono::steady_clock::now();
    auto sol = milp::solve_milp(p);
    rows.push_back({"solve_a_48", seconds_since(t0), p.num_vars(), p.num_binaries(), p.num_rows(),
                    static_cast<long>(p.num_nonzeros()),
                    fmt::format("{} nodes, {}", sol.nodes, milp::to_string(sol.status))});
  }
  return rows;
}

std::string format_benchmark(const std::vector<BenchmarkRow>& rows) {
  std::string out = fmt::format("{:<16} {:>10} {:>7} {:>6} {:>7} {:>9}  {}\n", "case", "ms", "vars",
                                "bins", "rows", "nonzeros", "note");
  for (const auto& r : rows) {
    out += fmt::format("{:<16} {:>10.3f} {:>7} {:>6} {:>7} {:>9}  {}\n", r.name, 1e3 * r.seconds,
                       r.vars, r.binaries, r.rows, r.nonzeros, r.note);
  }
  return out;
}

int cmd_validate(const std::filesystem::path& scenario, const CommandOptions& opt) {
  return guarded([&] {
    const Scenario s = load_scenario(scenario);
    validate_or_throw(s, opt);
    fmt::print("{}: ok ({} variant(s), hash {})\n", scenario.string(), variant_names(s).size(), s.hash);
    return int{kExitOk};
  });
}

namespace {

int run_impl(const std::filesystem::path& scenario, const CommandOptions& opt, bool mpc) {
  return guarded([&] {
    const Scenario s = load_scenario(scenario);
    validate_or_throw(s, opt);
    const auto dir = output_dir(s, opt);
    std::filesystem::create_directories(dir);
    RunReport r = execute(s, opt, mpc, dir);
    write_run_outputs(r, dir);
    print_kpi_summary(s.variant, r);
    fmt::print("outputs written to {}\n", dir.string());
    return int{kExitOk};
  });
}

}  // namespace

int cmd_run(const std::filesystem::path& scenario, const CommandOptions& opt) {
  return run_impl(scenario, opt, false);
}

int cmd_mpc(const std::filesystem::path& scenario, const CommandOptions& opt) {
  return run_impl(scenario, opt, true);
}

int cmd_compare(const std::filesystem::path& scenario, const CommandOptions& opt) {
  return guarded([&] {
    const Scenario s = load_scenario(scenario);
    validate_or_throw(s, opt);
    const auto dir = output_dir(s, opt);
    const auto names = compare_list(s);
    if (names.size() < 2) {
      throw ScenarioInvalid({{"NothingToCompare", "variants", "compare needs at least two variants"}});
    }

    // Variants are independent runs on identical data, so they can overlap.
    std::vector<std::future<RunReport>> jobs;
    for (const std::string& name : names) {
      jobs.push_back(std::async(std::launch::async, [&, name] {
        const Scenario v = with_variant(s, name);
        std::filesystem::create_directories(dir / name);
        return execute(v, opt, false, dir / name);
      }));
    }
    CompareReport cmp{s.hash, {}};
    std::exception_ptr first_error;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        RunReport r = jobs[i].get();
        write_run_outputs(r, dir / names[i]);
        print_kpi_summary(names[i], r);
        if (!r.kpi) {
          throw ScenarioInvalid({{"MissingPlant", "kpi", fmt::format("variant {} has no KPI plant", names[i])}});
        }
        cmp.rows.push_back({names[i], *r.kpi});
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    write_compare_outputs(cmp, dir);
    const auto& ref = cmp.rows.front().kpi;
    for (std::size_t i = 1; i < cmp.rows.size(); ++i) {
      const auto& k = cmp.rows[i].kpi;
      const double rel = ref.total_cost != 0.0 ? (k.total_cost - ref.total_cost) / ref.total_cost : 0.0;
      fmt::print("{} vs {}: cost {:+.2f}%, biomass share {:+.2f} pp\n", cmp.rows[i].variant,
                 cmp.rows.front().variant, 100.0 * rel, 100.0 * (k.biomass_share - ref.biomass_share));
    }
    fmt::print("outputs written to {}\n", dir.string());
    return int{kExitOk};
  });
}

int cmd_convergence(const std::filesystem::path& scenario, const CommandOptions& opt) {
  return guarded([&] {
    const Scenario s = load_scenario(scenario);
    validate_or_throw(s, opt);
    const auto dir = output_dir(s, opt);
    BuiltScenario built = build(s, {opt.seed, opt.gap_tol, dir});
    std::vector<int> mult = opt.multipliers.empty() ? built.convergence_multipliers : opt.multipliers;
    if (mult.empty()) mult = {8, 4, 2, 1};
    if (built.probes.empty()) {
      throw ScenarioInvalid({{"MissingField", "convergence.probes", "convergence needs probe slots"}});
    }
    auto rep = engine::convergence_study(built.sim, mult, built.probes);

    std::filesystem::create_directories(dir);
    {
      auto out = fmt::output_file((dir / "convergence.csv").string());
      out.print("multiplier,coupling_period_s");
      for (const auto& p : built.probes) out.print(",{}", p);
      out.print("\n");
      for (const auto& row : rep.rows) {
        out.print("{},{}", row.multiplier, row.coupling_period);
        for (const auto& p : built.probes) out.print(",{:.12g}", row.final_values.at(p));
        out.print("\n");
      }
    }
    {
      auto out = fmt::output_file((dir / "convergence_differences.csv").string());
      out.print("from_multiplier,to_multiplier");
      for (const auto& p : built.probes) out.print(",{}", p);
      out.print("\n");
      for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
        out.print("{},{}", rep.rows[i].multiplier, rep.rows[i + 1].multiplier);
        for (const auto& p : built.probes) out.print(",{:.12g}", rep.differences.at(p)[i]);
        out.print("\n");
      }
    }
    json j = {{"scenario_hash", s.hash}, {"multipliers", mult}, {"differences", rep.differences}};
    std::ofstream(dir / "convergence.json") << j.dump(2) << "\n";

    for (const auto& [slot, diffs] : rep.differences) {
      std::string line;
      for (double d : diffs) line += fmt::format(" {:.3e}", d);
      fmt::print("{}: successive differences{}\n", slot, line);
    }
    fmt::print("outputs written to {}\n", dir.string());
    return int{kExitOk};
  });
}

int cmd_benchmark(const CommandOptions& opt) {
  return guarded([&] {
    const auto rows = run_benchmark();
    const std::string table = format_benchmark(rows);
    fmt::print("{}", table);
    if (opt.out_dir) {
      std::filesystem::create_directories(*opt.out_dir);
      auto out = fmt::output_file((*opt.out_dir / "benchmark.csv").string());
      out.print("case,seconds,vars,binaries,rows,nonzeros,note\n");
      for (const auto& r : rows) {
        out.print("{},{:.6f},{},{},{},{},\"{}\"\n", r.name, r.seconds, r.vars, r.binaries, r.rows,
                  r.nonzeros, r.note);
      }
    }
    return int{kExitOk};
  });
}

}  // namespace dhcosim::runner
