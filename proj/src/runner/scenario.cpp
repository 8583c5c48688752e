#include "dhcosim/runner/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "dhcosim/engine/lag_module.hpp"
#include "dhcosim/engine/source_module.hpp"
#include "dhcosim/logic/logic_module.hpp"
#include "dhcosim/plants/rbc.hpp"
#include "dhcosim/plants/scenario_b.hpp"
#include "dhcosim/plants/synthetic.hpp"

namespace dhcosim::runner {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<Issue>& issues) {
  std::string out = fmt::format("scenario has {} problem(s)", issues.size());
  for (const Issue& i : issues) out += fmt::format("\n  [{}] {}: {}", i.code, i.where, i.message);
  return out;
}

// Reads typed fields out of JSON objects and records every problem instead of
// stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<Issue>& issues) : issues_(issues) {}

  void fail(std::string code, std::string where, std::string message) {
    issues_.push_back({std::move(code), std::move(where), std::move(message)});
  }
  bool ok() const { return issues_.empty(); }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    fail("TypeError", where, "expected an object");
    return false;
  }

  // Flags keys outside `allowed`; typos otherwise vanish silently.
  void known_keys(const json& obj, const std::string& where,
                  std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail("UnknownField", where + "." + key, "field is not recognised");
      }
    }
  }

  std::optional<double> number(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_number()) {
      fail("TypeError", where + "." + key, "expected a number");
      return std::nullopt;
    }
    return it->get<double>();
  }

  void number_into(const json& obj, const std::string& where, const char* key, double& out) {
    if (auto v = number(obj, where, key)) out = *v;
  }

  std::optional<std::int64_t> integer(const json& obj, const std::string& where,
                                      const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_number_integer()) {
      fail("TypeError", where + "." + key, "expected an integer");
      return std::nullopt;
    }
    return it->get<std::int64_t>();
  }

  template <class T>
  void integer_into(const json& obj, const std::string& where, const char* key, T& out) {
    if (auto v = integer(obj, where, key)) out = static_cast<T>(*v);
  }

  std::optional<std::string> string(const json& obj, const std::string& where, const char* key,
                                    bool required = false) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail("MissingField", where + "." + key, "required field is missing");
      return std::nullopt;
    }
    if (!it->is_string()) {
      fail("TypeError", where + "." + key, "expected a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_boolean()) {
      fail("TypeError", where + "." + key, "expected true or false");
      return std::nullopt;
    }
    return it->get<bool>();
  }

  std::vector<std::string> strings(const json& obj, const std::string& where, const char* key) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array()) {
      fail("TypeError", where + "." + key, "expected an array of strings");
      return out;
    }
    for (const json& e : *it) {
      if (!e.is_string()) {
        fail("TypeError", where + "." + key, "expected an array of strings");
        return {};
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  // Runs a library check and turns its exception into an issue.
  template <class F>
  void guard(const std::string& where, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      fail(e.code(), where, e.what());
    }
  }

 private:
  std::vector<Issue>& issues_;
};

template <class P>
struct Field {
  const char* name;
  double P::*member;
};

const std::vector<Field<plants::PlantParamsA>>& fields_a() {
  using P = plants::PlantParamsA;
  static const std::vector<Field<P>> f = {
      {"annual_load_mwh", &P::annual_load_mwh},
      {"renewable_target", &P::renewable_target},
      {"gas_max_mw", &P::gas_max_mw},
      {"biomass_max_mw", &P::biomass_max_mw},
      {"biomass_min_fraction", &P::biomass_min_fraction},
      {"storage_capacity_mwh", &P::storage_capacity_mwh},
      {"storage_power_mw", &P::storage_power_mw},
      {"stop_spacing_h", &P::stop_spacing_h},
      {"gas_price", &P::gas_price},
      {"biomass_price", &P::biomass_price},
      {"window_min_share", &P::window_min_share},
      {"initial_storage_mwh", &P::initial_storage_mwh},
  };
  return f;
}

const std::vector<Field<plants::PlantParamsB>>& fields_b() {
  using P = plants::PlantParamsB;
  static const std::vector<Field<P>> f = {
      {"biomass_max_mw", &P::biomass_max_mw},
      {"biomass_min_fraction", &P::biomass_min_fraction},
      {"biomass_price", &P::biomass_price},
      {"hp_max_mw", &P::hp_max_mw},
      {"hp_min_fraction", &P::hp_min_fraction},
      {"cop", &P::cop},
      {"storage_capacity_mwh", &P::storage_capacity_mwh},
      {"storage_power_mw", &P::storage_power_mw},
      {"stop_spacing_h", &P::stop_spacing_h},
      {"initial_storage_mwh", &P::initial_storage_mwh},
  };
  return f;
}

const std::vector<Field<plants::RbcParams>>& fields_rbc() {
  using P = plants::RbcParams;
  static const std::vector<Field<P>> f = {
      {"on_margin_mw", &P::on_margin_mw},
      {"off_margin_mw", &P::off_margin_mw},
      {"off_delay_h", &P::off_delay_h},
      {"step_h", &P::step_h},
      {"price_threshold", &P::price_threshold},
  };
  return f;
}

// Reads a flat parameter block. `extra` names keys handled by the caller.
template <class P>
P read_params(Reader& r, const json& obj, const std::string& where,
              const std::vector<Field<P>>& fields, std::initializer_list<std::string_view> extra = {}) {
  P p;
  if (!r.object(obj, where)) return p;
  for (const auto& [key, value] : obj.items()) {
    auto f = std::find_if(fields.begin(), fields.end(), [&](const Field<P>& x) { return key == x.name; });
    if (f != fields.end()) {
      r.number_into(obj, where, f->name, p.*(f->member));
    } else if (std::find(extra.begin(), extra.end(), key) == extra.end()) {
      r.fail("UnknownField", where + "." + key, "parameter is not recognised");
    }
  }
  return p;
}

plants::PlantParamsA read_plant_a(Reader& r, const json& module, const std::string& where) {
  const json params = module.value("params", json::object());
  auto p = read_params(r, params, where + ".params", fields_a(), {"stop_rule"});
  if (auto rule = r.string(params, where + ".params", "stop_rule")) {
    r.guard(where + ".params.stop_rule", [&] { p.stop_rule = plants::parse_stop_rule(*rule); });
  }
  r.guard(where + ".params", [&] { p.validate(); });
  return p;
}

plants::PlantParamsB read_plant_b(Reader& r, const json& module, const std::string& where) {
  auto p = read_params(r, module.value("params", json::object()), where + ".params", fields_b());
  r.guard(where + ".params", [&] { p.validate(); });
  return p;
}

plants::ControlKind read_control_kind(Reader& r, const json& module, const std::string& where) {
  const auto name = r.string(module, where, "controls").value_or("scalar");
  if (name == "scalar") return plants::ControlKind::kScalar;
  if (name == "time_vector") return plants::ControlKind::kTimeVector;
  r.fail("InvalidValue", where + ".controls", "expected \"scalar\" or \"time_vector\"");
  return plants::ControlKind::kScalar;
}

std::filesystem::path resolve(const Scenario& s, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : s.base_dir / path;
}

TimeVector read_data(Reader& r, const Scenario& s, const json& spec, const std::string& where,
                     std::uint64_t seed, std::uint64_t seed_offset) {
  const TimeVector empty({0}, {0.0});
  if (!r.object(spec, where)) return empty;
  if (spec.contains("csv")) {
    r.known_keys(spec, where, {"csv", "unit", "refine_step"});
    const auto file = r.string(spec, where, "csv").value_or("");
    const auto path = resolve(s, file);
    if (!std::filesystem::exists(path)) {
      r.fail("MissingFile", where + ".csv", fmt::format("file '{}' does not exist", path.string()));
      return empty;
    }
    std::optional<TimeVector> tv;
    r.guard(where, [&] { tv = read_time_vector_csv(path, r.string(spec, where, "unit").value_or("")); });
    if (!tv) return empty;
    if (auto step = r.integer(spec, where, "refine_step")) {
      r.guard(where + ".refine_step", [&] { tv = plants::refine_hold(*tv, *step); });
    }
    return *tv;
  }

  const auto gen = r.string(spec, where, "generator", true).value_or("");
  std::optional<TimeVector> tv;
  if (gen == "synthetic_load") {
    r.known_keys(spec, where,
                 {"generator", "annual_mwh", "origin", "step", "n_steps", "seasonal_amplitude",
                  "morning_peak", "evening_peak", "noise", "seed", "max_peak_mw", "refine_step"});
    plants::SyntheticLoadSpec g;
    g.seed = seed + seed_offset;
    r.number_into(spec, where, "annual_mwh", g.annual_mwh);
    r.integer_into(spec, where, "origin", g.origin);
    r.integer_into(spec, where, "step", g.step);
    r.integer_into(spec, where, "n_steps", g.n_steps);
    r.number_into(spec, where, "seasonal_amplitude", g.seasonal_amplitude);
    r.number_into(spec, where, "morning_peak", g.morning_peak);
    r.number_into(spec, where, "evening_peak", g.evening_peak);
    r.number_into(spec, where, "noise", g.noise);
    r.integer_into(spec, where, "seed", g.seed);
    r.number_into(spec, where, "max_peak_mw", g.max_peak_mw);
    r.guard(where, [&] { tv = plants::synthetic_load(g); });
  } else if (gen == "synthetic_price") {
    r.known_keys(spec, where,
                 {"generator", "origin", "step", "n_steps", "off_peak", "peak", "peak_start_h",
                  "peak_end_h", "noise", "seed", "refine_step"});
    plants::PriceSpec g;
    g.seed = seed + seed_offset;
    r.integer_into(spec, where, "origin", g.origin);
    r.integer_into(spec, where, "step", g.step);
    r.integer_into(spec, where, "n_steps", g.n_steps);
    r.number_into(spec, where, "off_peak", g.off_peak);
    r.number_into(spec, where, "peak", g.peak);
    r.integer_into(spec, where, "peak_start_h", g.peak_start_h);
    r.integer_into(spec, where, "peak_end_h", g.peak_end_h);
    r.number_into(spec, where, "noise", g.noise);
    r.integer_into(spec, where, "seed", g.seed);
    r.guard(where, [&] { tv = plants::synthetic_price(g); });
  } else if (!gen.empty()) {
    r.fail("InvalidValue", where + ".generator",
           fmt::format("unknown generator '{}' (synthetic_load, synthetic_price)", gen));
  }
  if (!tv) return empty;
  if (auto step = r.integer(spec, where, "refine_step")) {
    r.guard(where + ".refine_step", [&] { tv = plants::refine_hold(*tv, *step); });
  }
  return *tv;
}

// Repeats a series so that forecasts reaching past its end stay available.
TimeVector wrap_feed(const TimeVector& tv, Seconds extra) {
  if (tv.size() < 2) return tv;
  const Seconds step = tv.times()[1] - tv.times()[0];
  return plants::extend_cyclic(tv, tv.back_time() - tv.front_time() + step, extra);
}

struct Context {
  const Scenario& s;
  const BuildOptions& opt;
  Reader& r;
  std::map<std::string, TimeVector> data;
  std::optional<mpc::Horizon> horizon;
  milp::MilpOptions solver;
  std::map<std::string, json> modules;

  const TimeVector* series(const json& module, const std::string& where, const char* key) {
    auto id = r.string(module, where, key, true);
    if (!id) return nullptr;
    auto it = data.find(*id);
    if (it == data.end()) {
      r.fail("UnknownData", where + "." + key, fmt::format("no data source named '{}'", *id));
      return nullptr;
    }
    return &it->second;
  }
};

void add_module(Context& c, BuiltScenario& out, const std::string& id, const json& m) {
  Reader& r = c.r;
  const std::string where = "modules." + id;
  if (!r.object(m, where)) return;
  const auto type = r.string(m, where, "type", true).value_or("");
  auto& factories = out.sim.modules;

  if (type == "source") {
    r.known_keys(m, where, {"type", "series", "interp"});
    Interp mode = Interp::kHoldLast;
    if (auto name = r.string(m, where, "interp")) r.guard(where + ".interp", [&] { mode = parse_interp(*name); });
    std::map<std::string, TimeVector> series;
    const json ports = m.value("series", json::object());
    if (r.object(ports, where + ".series")) {
      for (const auto& [port, ref] : ports.items()) {
        if (const TimeVector* tv = c.series(ports, where + ".series", port.c_str())) series.emplace(port, *tv);
      }
    }
    factories[id] = [id, series, mode] { return std::make_unique<engine::SeriesSource>(id, series, mode); };
  } else if (type == "lag") {
    r.known_keys(m, where, {"type", "tau", "gain", "bias", "init"});
    engine::LagParams p;
    r.number_into(m, where, "tau", p.tau);
    r.number_into(m, where, "gain", p.gain);
    r.number_into(m, where, "bias", p.bias);
    r.number_into(m, where, "init", p.init);
    if (!(p.tau > 0.0)) r.fail("InvalidValue", where + ".tau", "time constant must be positive");
    factories[id] = [id, p] { return std::make_unique<engine::LagModule>(id, p); };
  } else if (type == "logic") {
    r.known_keys(m, where, {"type", "file", "text"});
    std::shared_ptr<const logic::ExecutionPlan> plan;
    r.guard(where, [&] {
      if (auto file = r.string(m, where, "file")) {
        const auto path = resolve(c.s, *file);
        if (!std::filesystem::exists(path)) {
          r.fail("MissingFile", where + ".file", fmt::format("file '{}' does not exist", path.string()));
          return;
        }
        plan = std::make_shared<const logic::ExecutionPlan>(logic::compile(logic::read_logic_file(path)));
      } else if (auto text = r.string(m, where, "text")) {
        plan = std::make_shared<const logic::ExecutionPlan>(logic::compile(logic::parse_logic_string(*text)));
      } else {
        r.fail("MissingField", where, "logic module needs \"file\" or \"text\"");
      }
    });
    if (plan) factories[id] = [id, plan] { return std::make_unique<logic::LogicModule>(id, plan); };
  } else if (type == "rbc") {
    r.known_keys(m, where, {"type", "plant", "params"});
    const auto plant = r.string(m, where, "plant", true);
    auto rp = read_params(r, m.value("params", json::object()), where + ".params", fields_rbc());
    if (!plant) return;
    auto it = c.modules.find(*plant);
    const std::string ptype = it == c.modules.end() ? "" : it->second.value("type", "");
    if (ptype != "plant_a" && ptype != "plant_b") {
      r.fail("InvalidValue", where + ".plant", fmt::format("'{}' is not a plant module", *plant));
      return;
    }
    std::shared_ptr<const logic::ExecutionPlan> plan;
    r.guard(where, [&] {
      const std::string text =
          ptype == "plant_a" ? plants::rbc_logic_a(read_plant_a(r, it->second, "modules." + *plant), rp)
                             : plants::rbc_logic_b(read_plant_b(r, it->second, "modules." + *plant), rp);
      plan = std::make_shared<const logic::ExecutionPlan>(logic::compile(logic::parse_logic_string(text)));
    });
    if (plan) factories[id] = [id, plan] { return std::make_unique<logic::LogicModule>(id, plan); };
  } else if (type == "plant_a") {
    r.known_keys(m, where, {"type", "params", "load", "controls"});
    auto p = read_plant_a(r, m, where);
    auto kind = read_control_kind(r, m, where);
    const TimeVector* load = c.series(m, where, "load");
    if (!load) return;
    factories[id] = [id, p, tv = *load, kind, log = out.violations] {
      return std::make_unique<plants::PlantA>(id, p, tv, kind, log);
    };
  } else if (type == "plant_b") {
    r.known_keys(m, where, {"type", "params", "load", "price", "controls"});
    auto p = read_plant_b(r, m, where);
    auto kind = read_control_kind(r, m, where);
    const TimeVector* load = c.series(m, where, "load");
    const TimeVector* price = c.series(m, where, "price");
    if (!load || !price) return;
    factories[id] = [id, p, l = *load, pr = *price, kind, log = out.violations] {
      return std::make_unique<plants::PlantB>(id, p, l, pr, kind, log);
    };
  } else if (type == "mpc") {
    r.known_keys(m, where, {"type", "plant", "forecasts", "cyclic"});
    if (!c.horizon) {
      r.fail("MissingField", "horizon", "an mpc module needs a horizon block");
      return;
    }
    const auto plant = r.string(m, where, "plant", true);
    if (!plant) return;
    auto it = c.modules.find(*plant);
    const std::string ptype = it == c.modules.end() ? "" : it->second.value("type", "");
    if (ptype != "plant_a" && ptype != "plant_b") {
      r.fail("InvalidValue", where + ".plant", fmt::format("'{}' is not a plant module", *plant));
      return;
    }
    std::shared_ptr<const mpc::Formulator> formulator;
    r.guard(where, [&] {
      if (ptype == "plant_a") {
        formulator = std::make_shared<plants::FormulatorA>(read_plant_a(r, it->second, "modules." + *plant));
      } else {
        formulator = std::make_shared<plants::FormulatorB>(read_plant_b(r, it->second, "modules." + *plant));
      }
    });
    if (!formulator) return;
    const bool cyclic = r.boolean(m, where, "cyclic").value_or(true);
    mpc::MpcModuleConfig cfg;
    cfg.horizon = *c.horizon;
    cfg.solver = c.solver;
    cfg.dump_dir = c.opt.dump_dir;
    cfg.diagnostics = out.diagnostics;
    const json fc = m.value("forecasts", json::object());
    if (!r.object(fc, where + ".forecasts")) return;
    for (const std::string& name : formulator->forecasts()) {
      if (!fc.contains(name)) {
        r.fail("MissingField", where + ".forecasts." + name, "forecast has no data source");
        continue;
      }
      if (const TimeVector* tv = c.series(fc, where + ".forecasts", name.c_str())) {
        cfg.feed.emplace(name, cyclic ? wrap_feed(*tv, c.horizon->length) : *tv);
      }
    }
    out.has_mpc = true;
    factories[id] = [id, formulator, cfg] { return std::make_unique<mpc::MpcModule>(id, formulator, cfg); };
  } else if (!type.empty()) {
    r.fail("InvalidValue", where + ".type",
           fmt::format("unknown module type '{}' (source, lag, logic, rbc, plant_a, plant_b, mpc)", type));
  }
}

void build_into(const Scenario& s, const BuildOptions& opt, Reader& r, BuiltScenario& out) {
  const json& doc = s.doc;
  if (!r.object(doc, "$")) return;
  r.known_keys(doc, "$",
               {"name", "description", "seed", "engine", "sequences", "data", "modules", "wiring",
                "horizon", "solver", "output", "kpi", "variants", "compare", "convergence"});

  std::uint64_t seed = kDefaultSeed;
  r.integer_into(doc, "$", "seed", seed);
  if (opt.seed) seed = *opt.seed;

  out.violations = std::make_shared<plants::ViolationLog>();

  // Engine block.
  const json eng = doc.value("engine", json());
  if (eng.is_null()) {
    r.fail("MissingField", "engine", "required block is missing");
  } else if (r.object(eng, "engine")) {
    r.known_keys(eng, "engine", {"origin", "base_period", "duration", "parallel"});
    r.integer_into(eng, "engine", "origin", out.sim.origin);
    if (!eng.contains("base_period")) r.fail("MissingField", "engine.base_period", "required field is missing");
    if (!eng.contains("duration")) r.fail("MissingField", "engine.duration", "required field is missing");
    r.integer_into(eng, "engine", "base_period", out.sim.base_period);
    r.integer_into(eng, "engine", "duration", out.sim.duration);
    out.sim.parallel = r.boolean(eng, "engine", "parallel").value_or(false);
  }

  // Horizon and solver settings, shared by every MPC module.
  Context c{s, opt, r, {}, std::nullopt, {}, {}};
  if (doc.contains("horizon") && r.object(doc["horizon"], "horizon")) {
    const json& h = doc["horizon"];
    r.known_keys(h, "horizon", {"control_period", "length", "step"});
    mpc::Horizon hz;
    r.integer_into(h, "horizon", "control_period", hz.control_period);
    r.integer_into(h, "horizon", "length", hz.length);
    r.integer_into(h, "horizon", "step", hz.step);
    r.guard("horizon", [&] { hz.validate(); });
    c.horizon = hz;
  }
  if (doc.contains("solver") && r.object(doc["solver"], "solver")) {
    const json& sv = doc["solver"];
    r.known_keys(sv, "solver", {"gap_tol", "integrality_tol", "node_limit", "time_limit_s"});
    r.number_into(sv, "solver", "gap_tol", c.solver.gap_tol);
    r.number_into(sv, "solver", "integrality_tol", c.solver.integrality_tol);
    r.integer_into(sv, "solver", "node_limit", c.solver.node_limit);
    r.number_into(sv, "solver", "time_limit_s", c.solver.time_limit_s);
  }
  if (opt.gap_tol) c.solver.gap_tol = *opt.gap_tol;
  if (!(c.solver.gap_tol >= 0.0)) r.fail("InvalidValue", "solver.gap_tol", "gap tolerance must be >= 0");

  // Data sources. Generators without an explicit seed derive theirs from the
  // scenario seed and their position, so two generators never share a stream.
  if (doc.contains("data") && r.object(doc["data"], "data")) {
    std::uint64_t offset = 0;
    for (const auto& [name, spec] : doc["data"].items()) {
      c.data.emplace(name, read_data(r, s, spec, "data." + name, seed, offset++));
    }
  }

  // Modules. Plants are read first so that rbc/mpc modules can refer to them.
  const json mods = doc.value("modules", json());
  if (mods.is_null()) {
    r.fail("MissingField", "modules", "required block is missing");
  } else if (r.object(mods, "modules")) {
    for (const auto& [id, m] : mods.items()) c.modules.emplace(id, m);
    for (const auto& [id, m] : mods.items()) {
      if (id.find('.') != std::string::npos) {
        r.fail("InvalidValue", "modules." + id, "module ids must not contain '.'");
        continue;
      }
      if (m.is_object() && m.contains("type") && m["type"] == "mpc" && !out.diagnostics) {
        out.diagnostics = std::make_shared<mpc::Diagnostics>();
      }
    }
    for (const auto& [id, m] : mods.items()) add_module(c, out, id, m);
  }

  // Sequences.
  const json seqs = doc.value("sequences", json());
  if (!seqs.is_array()) {
    r.fail(seqs.is_null() ? "MissingField" : "TypeError", "sequences", "expected an array of sequences");
  } else {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const std::string where = fmt::format("sequences[{}]", i);
      if (!r.object(seqs[i], where)) continue;
      r.known_keys(seqs[i], where, {"name", "multiplier", "modules"});
      engine::SequenceSpec spec;
      spec.name = r.string(seqs[i], where, "name", true).value_or("");
      r.integer_into(seqs[i], where, "multiplier", spec.multiplier);
      spec.modules = r.strings(seqs[i], where, "modules");
      for (const std::string& m : spec.modules) {
        if (!c.modules.count(m)) {
          r.fail("UnknownModule", where + ".modules", fmt::format("no module named '{}'", m));
        }
      }
      out.sim.sequences.push_back(std::move(spec));
    }
  }

  // Wiring: "consumer.port": "producer.port".
  if (doc.contains("wiring") && r.object(doc["wiring"], "wiring")) {
    for (const auto& [dst, src] : doc["wiring"].items()) {
      if (!src.is_string()) {
        r.fail("TypeError", "wiring." + dst, "expected a slot name");
        continue;
      }
      out.sim.wiring[dst] = src.get<std::string>();
    }
  }

  // Outputs and KPI selection.
  if (doc.contains("output") && r.object(doc["output"], "output")) {
    r.known_keys(doc["output"], "output", {"dir", "probes"});
    r.string(doc["output"], "output", "dir");
    out.probes = r.strings(doc["output"], "output", "probes");
  }
  std::optional<std::string> kpi_plant;
  double target = -1.0;
  if (doc.contains("kpi") && r.object(doc["kpi"], "kpi")) {
    r.known_keys(doc["kpi"], "kpi", {"plant", "renewable_target"});
    kpi_plant = r.string(doc["kpi"], "kpi", "plant");
    r.number_into(doc["kpi"], "kpi", "renewable_target", target);
  }
  if (!kpi_plant) {
    std::vector<std::string> plants_found;
    for (const auto& [id, m] : c.modules) {
      const std::string t = m.is_object() ? m.value("type", "") : "";
      if (t == "plant_a" || t == "plant_b") plants_found.push_back(id);
    }
    if (plants_found.size() == 1) kpi_plant = plants_found.front();
  }
  if (kpi_plant) {
    auto it = c.modules.find(*kpi_plant);
    const std::string t = it == c.modules.end() || !it->second.is_object() ? "" : it->second.value("type", "");
    if (t != "plant_a" && t != "plant_b") {
      r.fail("InvalidValue", "kpi.plant", fmt::format("'{}' is not a plant module", *kpi_plant));
    } else {
      plants::KpiInputs k;
      k.plant_id = *kpi_plant;
      k.step = out.sim.base_period;
      for (const auto& seq : out.sim.sequences) {
        if (std::find(seq.modules.begin(), seq.modules.end(), *kpi_plant) != seq.modules.end()) {
          k.step = out.sim.base_period * seq.multiplier;
        }
      }
      if (t == "plant_a") {
        const auto p = read_plant_a(r, it->second, "modules." + *kpi_plant);
        k.storage_capacity_mwh = p.storage_capacity_mwh;
        k.renewable_target = p.renewable_target;
      } else {
        k.storage_capacity_mwh = read_plant_b(r, it->second, "modules." + *kpi_plant).storage_capacity_mwh;
      }
      if (target >= 0.0) k.renewable_target = target;
      k.diagnostics = out.diagnostics.get();
      out.kpi = k;
    }
  }

  if (doc.contains("convergence") && r.object(doc["convergence"], "convergence")) {
    const json& cv = doc["convergence"];
    r.known_keys(cv, "convergence", {"multipliers", "probes"});
    if (cv.contains("multipliers")) {
      if (!cv["multipliers"].is_array()) {
        r.fail("TypeError", "convergence.multipliers", "expected an array of integers");
      } else {
        for (const json& m : cv["multipliers"]) {
          if (!m.is_number_integer() || m.get<int>() < 1) {
            r.fail("InvalidValue", "convergence.multipliers", "multipliers are integers >= 1");
            break;
          }
          out.convergence_multipliers.push_back(m.get<int>());
        }
      }
    }
    auto probes = r.strings(cv, "convergence", "probes");
    if (!probes.empty() && out.probes.empty()) out.probes = probes;
  }

  if (!r.ok()) return;
  // Port-level wiring, sequence and duration checks need live modules.
  r.guard("wiring", [&] { engine::validate_simulation(out.sim); });
}

// Plant parameters are read again by every rbc/mpc module pointing at the
// plant, so the same problem can be recorded more than once.
void dedupe(std::vector<Issue>& issues) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::vector<Issue> kept;
  for (Issue& i : issues) {
    if (seen.insert({i.code, i.where, i.message}).second) kept.push_back(std::move(i));
  }
  issues = std::move(kept);
}

}  // namespace

ScenarioInvalid::ScenarioInvalid(std::vector<Issue> issues)
    : Error("ScenarioInvalid", summarize(issues)), issues_(std::move(issues)) {}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  Scenario s;
  s.base_dir = base_dir;
  s.hash = hash_hex(fnv1a(text));
  try {
    s.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioInvalid({{"ParseError", "$", e.what()}});
  }
  if (!s.doc.is_object()) throw ScenarioInvalid({{"TypeError", "$", "scenario must be a JSON object"}});
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioInvalid({{"MissingFile", path.string(), "cannot open scenario file"}});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.has_parent_path() ? path.parent_path() : ".");
}

std::vector<std::string> variant_names(const Scenario& s) {
  std::vector<std::string> names;
  auto it = s.doc.find("variants");
  if (it == s.doc.end() || !it->is_object()) return names;
  for (const auto& [name, patch] : it->items()) names.push_back(name);
  return names;
}

Scenario with_variant(const Scenario& s, const std::string& name) {
  if (name == "base") return s;
  auto it = s.doc.find("variants");
  if (it == s.doc.end() || !it->is_object() || !it->contains(name)) {
    throw ScenarioInvalid({{"UnknownVariant", "variants." + name, "no variant with this name"}});
  }
  Scenario out = s;
  json patch = (*it)[name];
  out.doc.merge_patch(patch);
  out.doc.erase("variants");
  out.variant = name;
  return out;
}

std::vector<Issue> validate(const Scenario& s, const BuildOptions& opt) {
  std::vector<Issue> issues;
  {
    Reader r(issues);
    BuiltScenario out;
    build_into(s, opt, r, out);
  }
  dedupe(issues);
  auto it = s.doc.find("variants");
  if (it != s.doc.end() && !it->is_object()) {
    issues.push_back({"TypeError", "variants", "expected an object of merge patches"});
    return issues;
  }
  for (const std::string& name : variant_names(s)) {
    if (!(*it)[name].is_object()) {
      issues.push_back({"TypeError", "variants." + name, "expected an object"});
      continue;
    }
    std::vector<Issue> sub;
    Reader r(sub);
    BuiltScenario out;
    build_into(with_variant(s, name), opt, r, out);
    dedupe(sub);
    for (Issue& i : sub) {
      i.where = fmt::format("variant {}: {}", name, i.where);
      issues.push_back(std::move(i));
    }
  }
  if (s.doc.contains("compare")) {
    const json& cmp = s.doc["compare"];
    const auto names = variant_names(s);
    if (!cmp.is_array()) {
      issues.push_back({"TypeError", "compare", "expected an array of variant names"});
    } else {
      for (const json& n : cmp) {
        const bool known = n.is_string() && (n == "base" || std::count(names.begin(), names.end(), n.get<std::string>()));
        if (!known) issues.push_back({"UnknownVariant", "compare", fmt::format("no variant {}", n.dump())});
      }
    }
  }
  return issues;
}

BuiltScenario build(const Scenario& s, const BuildOptions& opt) {
  std::vector<Issue> issues;
  Reader r(issues);
  BuiltScenario out;
  build_into(s, opt, r, out);
  dedupe(issues);
  if (!issues.empty()) throw ScenarioInvalid(std::move(issues));
  return out;
}

}  // namespace dhcosim::runner
