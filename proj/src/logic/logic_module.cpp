#include "dhcosim/logic/logic_module.hpp"

namespace dhcosim::logic {

namespace {

std::vector<engine::PortSpec> ports(const ExecutionPlan& plan, const std::vector<int>& blocks,
                                    bool with_default) {
  std::vector<engine::PortSpec> out;
  for (int i : blocks) {
    const CompiledBlock& b = plan.blocks[i];
    out.push_back({b.id, SlotKind::kScalar, with_default ? b.params[0] : 0.0});
  }
  return out;
}

}  // namespace

LogicModule::LogicModule(std::string id, std::shared_ptr<const ExecutionPlan> plan)
    : SimModule(std::move(id), ports(*plan, plan->external_inputs, true),
                ports(*plan, plan->external_outputs, false)),
      plan_(std::move(plan)),
      state_(*plan_) {}

void LogicModule::on_initialize(Seconds /*t0*/) { state_.reset(); }

void LogicModule::on_step(Seconds t, Seconds dt) {
  std::map<std::string, double> in;
  for (int i : plan_->external_inputs) {
    const std::string& name = plan_->blocks[i].id;
    in[name] = input(name);
  }
  const auto out = step(*plan_, state_, in, static_cast<double>(t), static_cast<double>(dt));
  for (const auto& [name, value] : out) output(name, value);
}

}  // namespace dhcosim::logic
