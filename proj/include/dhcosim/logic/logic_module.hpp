#pragma once

#include <memory>

#include "dhcosim/engine/module.hpp"
#include "dhcosim/logic/logic.hpp"

namespace dhcosim::logic {

// Runs a compiled logic model as a co-simulation module. Every `input` block
// becomes an input port and every `output` block an output port, both named
// after the block id.
class LogicModule final : public engine::SimModule {
 public:
  LogicModule(std::string id, std::shared_ptr<const ExecutionPlan> plan);

  const LogicState& state() const { return state_; }

 protected:
  void on_initialize(Seconds t0) override;
  void on_step(Seconds t, Seconds dt) override;

 private:
  std::shared_ptr<const ExecutionPlan> plan_;
  LogicState state_;
};

}  // namespace dhcosim::logic
