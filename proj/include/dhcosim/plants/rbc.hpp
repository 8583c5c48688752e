#pragma once

#include <string>

#include "dhcosim/plants/scenario_a.hpp"
#include "dhcosim/plants/scenario_b.hpp"

namespace dhcosim::plants {

// Thresholds of the rule-based baselines.
struct RbcParams {
  // Commit biomass once the load reaches min power + on_margin.
  double on_margin_mw = 0.3;
  // Release it after the load has stayed below min power - off_margin for
  // off_delay_h hours, provided the stop-spacing timer allows a stop.
  double off_margin_mw = 0.0;
  double off_delay_h = 2.0;
  // Controller step, used to turn stored energy into an available power.
  double step_h = 1.0;
  // Scenario B: the heat pump is preferred while the electricity price is
  // below this value. <= 0 means biomass_price * cop (break-even).
  double price_threshold = 0.0;
};

// Logic models (block text) with inputs load, E, since_stop (and price_el for
// B) and outputs u, Pb, Pch, Pdis.
std::string rbc_logic_a(const PlantParamsA& plant, const RbcParams& rbc);
std::string rbc_logic_b(const PlantParamsB& plant, const RbcParams& rbc);

}  // namespace dhcosim::plants
