#include "dhcosim/plants/kpi.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace dhcosim::plants {

namespace {

const engine::Series* find(const engine::RunResults& r, const std::string& slot) {
  auto it = r.series.find(slot);
  return it == r.series.end() ? nullptr : &it->second;
}

double sum(const engine::Series* s) {
  double acc = 0.0;
  if (s != nullptr) {
    for (double v : s->values) acc += v;
  }
  return acc;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> kpi_fields(const KpiReport& k) {
  auto num = [](double v) { return fmt::format("{:.6f}", v); };
  return {
      {"steps", fmt::format("{}", k.steps)},
      {"load_mwh", num(k.load_mwh)},
      {"biomass_mwh", num(k.biomass_mwh)},
      {"gas_mwh", num(k.gas_mwh)},
      {"heat_pump_mwh", num(k.heat_pump_mwh)},
      {"charged_mwh", num(k.charged_mwh)},
      {"discharged_mwh", num(k.discharged_mwh)},
      {"produced_mwh", num(k.produced_mwh)},
      {"biomass_share", num(k.biomass_share)},
      {"renewable_target", num(k.renewable_target)},
      {"meets_renewable_target", k.meets_renewable_target ? "true" : "false"},
      {"total_cost", num(k.total_cost)},
      {"stops", fmt::format("{}", k.stops)},
      {"violation_steps", fmt::format("{}", k.violation_steps)},
      {"spacing_violations", fmt::format("{}", k.spacing_violations)},
      {"storage_bound_violations", fmt::format("{}", k.storage_bound_violations)},
      {"unmet_mwh", num(k.unmet_mwh)},
      {"surplus_mwh", num(k.surplus_mwh)},
      {"storage_clipped_mwh", num(k.storage_clipped_mwh)},
      {"mpc_iterations", fmt::format("{}", k.mpc_iterations)},
      {"solves_optimal", fmt::format("{}", k.solves_optimal)},
      {"solves_not_optimal", fmt::format("{}", k.solves_not_optimal)},
      {"nodes_total", fmt::format("{}", k.nodes_total)},
      {"solve_time_total_s", num(k.solve_time_total_s)},
      {"solve_time_max_s", num(k.solve_time_max_s)},
      {"problem_vars", fmt::format("{}", k.problem_vars)},
      {"problem_binaries", fmt::format("{}", k.problem_binaries)},
      {"problem_rows", fmt::format("{}", k.problem_rows)},
      {"reference_biomass_no_storage_mwh", num(k.reference_biomass_no_storage_mwh)},
      {"reference_biomass_with_storage_mwh", num(k.reference_biomass_with_storage_mwh)},
  };
}

KpiReport compute_kpis(const engine::RunResults& results, const KpiInputs& in) {
  const std::string p = in.plant_id + ".";
  const engine::Series* load = find(results, p + "load");
  if (load == nullptr) {
    throw InvalidArgument(fmt::format("run has no '{}load' series", p));
  }
  const double dt_h = static_cast<double>(in.step) / 3600.0;

  KpiReport k;
  k.steps = static_cast<long>(load->values.size());
  k.load_mwh = sum(load) * dt_h;
  k.biomass_mwh = sum(find(results, p + "Pb")) * dt_h;
  k.gas_mwh = sum(find(results, p + "Pg")) * dt_h;
  k.heat_pump_mwh = sum(find(results, p + "Php")) * dt_h;
  k.charged_mwh = sum(find(results, p + "Pch")) * dt_h;
  k.discharged_mwh = sum(find(results, p + "Pdis")) * dt_h;
  k.produced_mwh = k.biomass_mwh + k.gas_mwh + k.heat_pump_mwh;
  k.biomass_share = k.produced_mwh > 0.0 ? k.biomass_mwh / k.produced_mwh : 0.0;
  k.renewable_target = in.renewable_target;
  k.meets_renewable_target = k.biomass_share >= in.renewable_target;
  k.total_cost = sum(find(results, p + "cost"));
  k.stops = std::lround(sum(find(results, p + "stop")));
  k.spacing_violations = std::lround(sum(find(results, p + "spacing_violation")));
  k.storage_clipped_mwh = sum(find(results, p + "storage_clipped"));

  if (const auto* v = find(results, p + "violations")) {
    k.violation_steps = std::count_if(v->values.begin(), v->values.end(),
                                      [](double x) { return x > 0.0; });
  }
  if (const auto* imb = find(results, p + "imbalance")) {
    for (double x : imb->values) {
      if (x > 0.0) k.surplus_mwh += x * dt_h;
      if (x < 0.0) k.unmet_mwh -= x * dt_h;
    }
  }
  if (const auto* e = find(results, p + "E")) {
    k.storage_bound_violations = std::count_if(e->values.begin(), e->values.end(), [&](double x) {
      return x < 0.0 || x > in.storage_capacity_mwh;
    });
  }

  if (in.diagnostics != nullptr) {
    const mpc::Diagnostics& d = *in.diagnostics;
    k.mpc_iterations = static_cast<long>(d.records.size());
    for (const auto& r : d.records) {
      (r.status == milp::SolveStatus::kOptimal ? k.solves_optimal : k.solves_not_optimal) += 1;
      k.nodes_total += r.nodes;
      k.solve_time_total_s += r.wall_time_s;
      k.solve_time_max_s = std::max(k.solve_time_max_s, r.wall_time_s);
    }
    k.problem_vars = d.n_vars;
    k.problem_binaries = d.n_binaries;
    k.problem_rows = d.n_rows;
  }
  return k;
}

std::string format_kpis(const KpiReport& k) {
  std::string out;
  for (const auto& [key, value] : kpi_fields(k)) out += fmt::format("{} = {}\n", key, value);
  return out;
}

void write_kpi_csv(const std::filesystem::path& path, const KpiReport& k) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = fmt::output_file(path.string());
  out.print("kpi,value\n");
  for (const auto& [key, value] : kpi_fields(k)) out.print("{},{}\n", key, value);
}

}  // namespace dhcosim::plants
