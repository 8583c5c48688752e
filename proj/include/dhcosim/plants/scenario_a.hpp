#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dhcosim/core/time.hpp"
#include "dhcosim/engine/module.hpp"
#include "dhcosim/mpc/mpc.hpp"

namespace dhcosim::plants {

// How the "minimum duration between two stops" rule is read.
enum class StopRule {
  kStopSpacing,  // at most one stop event in any window of `stop_spacing_h`
  kMinUpTime,    // once started, the boiler stays on for `stop_spacing_h`
};

StopRule parse_stop_rule(const std::string& name);
const char* to_string(StopRule rule);

// Biomass + gas boiler plant with an optional storage tank. Prices are per MWh
// of delivered heat (boiler efficiency taken as 1).
struct PlantParamsA {
  double annual_load_mwh = 21217.0;
  double renewable_target = 0.60;
  double gas_max_mw = 9.8;
  double biomass_max_mw = 3.05;
  double biomass_min_fraction = 0.40;
  double storage_capacity_mwh = 2.0;
  double storage_power_mw = 1.0;
  double stop_spacing_h = 10.0;
  double gas_price = 35.0;
  double biomass_price = 30.0;
  StopRule stop_rule = StopRule::kStopSpacing;
  // Optional per-window lower bound on the biomass share of the load; < 0 disables.
  double window_min_share = -1.0;
  double initial_storage_mwh = 0.0;

  double biomass_min_mw() const { return biomass_min_fraction * biomass_max_mw; }
  void validate() const;
};

// Builds the per-window MILP. State inputs: E (MWh), u (0/1), since_stop and
// since_start (hours). Forecast: load (MW). Controls: u, Pb, Pg, Pch, Pdis.
class FormulatorA final : public mpc::Formulator {
 public:
  explicit FormulatorA(PlantParamsA params);

  std::vector<std::string> state_inputs() const override;
  std::vector<std::string> forecasts() const override;
  std::vector<std::string> controls() const override;
  mpc::Formulation formulate(const mpc::StateSnapshot& state, const mpc::ForecastWindow& forecast,
                             const mpc::Horizon& horizon) const override;

  const PlantParamsA& params() const { return p_; }

 private:
  PlantParamsA p_;
};

struct PlantStateA {
  double E = 0.0;
  bool u = false;
  double since_stop_h = 1e6;
  double since_start_h = 1e6;
};

struct ControlsA {
  double u = 0.0;
  double Pb = 0.0;
  double Pch = 0.0;
  double Pdis = 0.0;
};

struct StepResultA {
  PlantStateA state;
  double Pb = 0.0, Pg = 0.0, Pch = 0.0, Pdis = 0.0;
  double load = 0.0;
  // Pg + Pb + Pdis - Pch - load: > 0 is surplus heat, < 0 is unmet load.
  double imbalance = 0.0;
  double storage_clipped_mwh = 0.0;
  bool stop = false;
  bool start = false;
  bool spacing_violated = false;
  double cost = 0.0;
  std::vector<std::string> violations;
};

// Physics of one step, independent of the optimizer: biomass clamped to its
// operating range, storage integrated and clipped to its bounds, gas covering
// what is left.
StepResultA simulate_step_a(const PlantStateA& state, const ControlsA& cmd, double load,
                            double dt_h, const PlantParamsA& p);

struct ViolationRecord {
  Seconds time;
  std::string module;
  std::string what;
};

using ViolationLog = std::vector<ViolationRecord>;

enum class ControlKind { kScalar, kTimeVector };

// Plant module. Control inputs u, Pb, Pch, Pdis are scalars (RBC) or
// time-vectors sampled hold-last at the step time (MPC).
class PlantA final : public engine::SimModule {
 public:
  PlantA(std::string id, PlantParamsA params, TimeVector load, ControlKind kind,
         std::shared_ptr<ViolationLog> log = nullptr);

 protected:
  void on_initialize(Seconds t0) override;
  void on_step(Seconds t, Seconds dt) override;

 private:
  double command(const std::string& port, Seconds t) const;
  void publish_state();

  PlantParamsA p_;
  TimeVector load_;
  ControlKind kind_;
  std::shared_ptr<ViolationLog> log_;
  PlantStateA state_;
};

std::vector<engine::PortSpec> control_ports(const std::vector<std::string>& names,
                                            ControlKind kind);

}  // namespace dhcosim::plants
