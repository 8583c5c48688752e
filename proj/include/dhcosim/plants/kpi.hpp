#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dhcosim/engine/engine.hpp"
#include "dhcosim/mpc/mpc.hpp"

namespace dhcosim::plants {

struct KpiReport {
  long steps = 0;
  double load_mwh = 0.0;
  double biomass_mwh = 0.0;
  double gas_mwh = 0.0;        // scenario A
  double heat_pump_mwh = 0.0;  // scenario B
  double charged_mwh = 0.0;
  double discharged_mwh = 0.0;
  double produced_mwh = 0.0;   // biomass + gas + heat pump
  double biomass_share = 0.0;  // biomass_mwh / produced_mwh
  double renewable_target = 0.0;
  bool meets_renewable_target = false;
  double total_cost = 0.0;

  long stops = 0;
  long violation_steps = 0;
  long spacing_violations = 0;
  long storage_bound_violations = 0;  // simulated E outside [0, capacity]
  double unmet_mwh = 0.0;
  double surplus_mwh = 0.0;
  double storage_clipped_mwh = 0.0;

  long mpc_iterations = 0;
  long solves_optimal = 0;
  long solves_not_optimal = 0;
  long nodes_total = 0;
  double solve_time_total_s = 0.0;
  double solve_time_max_s = 0.0;
  int problem_vars = 0;
  int problem_binaries = 0;
  int problem_rows = 0;

  // Yearly biomass energies published for the original 1500-housing load
  // curve (without / with storage). Context only; the synthetic load differs.
  double reference_biomass_no_storage_mwh = 12841.0;
  double reference_biomass_with_storage_mwh = 14464.0;
};

struct KpiInputs {
  std::string plant_id;
  Seconds step = 3600;  // plant step length
  double storage_capacity_mwh = 0.0;
  double renewable_target = 0.60;
  const mpc::Diagnostics* diagnostics = nullptr;
};

// Aggregates a finished run from the plant's recorded series.
KpiReport compute_kpis(const engine::RunResults& results, const KpiInputs& in);

// Field names and formatted values, in report order.
std::vector<std::pair<std::string, std::string>> kpi_fields(const KpiReport& k);

// `key = value` lines, one per field.
std::string format_kpis(const KpiReport& k);
void write_kpi_csv(const std::filesystem::path& path, const KpiReport& k);

}  // namespace dhcosim::plants
