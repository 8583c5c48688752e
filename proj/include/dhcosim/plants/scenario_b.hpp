#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dhcosim/plants/scenario_a.hpp"

namespace dhcosim::plants {

// Biomass boiler + electric heat pump + storage, driven by an electricity
// price series. Representative sizes; prices in EUR/MWh.
struct PlantParamsB {
  double biomass_max_mw = 3.0;
  double biomass_min_fraction = 0.40;
  double biomass_price = 30.0;
  double hp_max_mw = 3.0;  // thermal
  double hp_min_fraction = 0.20;
  double cop = 3.0;
  double storage_capacity_mwh = 6.0;
  double storage_power_mw = 2.0;
  double stop_spacing_h = 4.0;
  double initial_storage_mwh = 0.0;

  double biomass_min_mw() const { return biomass_min_fraction * biomass_max_mw; }
  double hp_min_mw() const { return hp_min_fraction * hp_max_mw; }
  void validate() const;
};

// State inputs: E, u, since_stop. Forecasts: load (MW), price_el (EUR/MWh).
// Controls: u, Pb, h, Php, Pch, Pdis.
class FormulatorB final : public mpc::Formulator {
 public:
  explicit FormulatorB(PlantParamsB params);

  std::vector<std::string> state_inputs() const override;
  std::vector<std::string> forecasts() const override;
  std::vector<std::string> controls() const override;
  mpc::Formulation formulate(const mpc::StateSnapshot& state, const mpc::ForecastWindow& forecast,
                             const mpc::Horizon& horizon) const override;

  const PlantParamsB& params() const { return p_; }

 private:
  PlantParamsB p_;
};

struct StepResultB {
  PlantStateA state;  // same state variables as scenario A
  double Pb = 0.0, Php = 0.0, Pch = 0.0, Pdis = 0.0;
  double load = 0.0;
  double price = 0.0;
  double imbalance = 0.0;  // Pb + Php + Pdis - Pch - load
  double storage_clipped_mwh = 0.0;
  bool stop = false;
  bool spacing_violated = false;
  double cost = 0.0;
  std::vector<std::string> violations;
};

// Heat pump covers whatever biomass and storage leave, up to its maximum.
StepResultB simulate_step_b(const PlantStateA& state, const ControlsA& cmd, double load,
                            double price, double dt_h, const PlantParamsB& p);

class PlantB final : public engine::SimModule {
 public:
  PlantB(std::string id, PlantParamsB params, TimeVector load, TimeVector price, ControlKind kind,
         std::shared_ptr<ViolationLog> log = nullptr);

 protected:
  void on_initialize(Seconds t0) override;
  void on_step(Seconds t, Seconds dt) override;

 private:
  double command(const std::string& port, Seconds t) const;
  void publish_state();

  PlantParamsB p_;
  TimeVector load_;
  TimeVector price_;
  ControlKind kind_;
  std::shared_ptr<ViolationLog> log_;
  PlantStateA state_;
};

}  // namespace dhcosim::plants
