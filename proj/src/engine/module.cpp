#include "dhcosim/engine/module.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dhcosim::engine {

const char* to_string(Lifecycle state) {
  switch (state) {
    case Lifecycle::kCreated: return "created";
    case Lifecycle::kInitialized: return "initialized";
    case Lifecycle::kRunning: return "running";
    case Lifecycle::kTerminated: return "terminated";
  }
  return "?";
}

std::string slot_name(const std::string& module_id, const std::string& port) {
  return module_id + "." + port;
}

SimModule::SimModule(std::string id, std::vector<PortSpec> inputs,
                     std::vector<PortSpec> outputs)
    : id_(std::move(id)), inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (id_.empty() || id_.find('.') != std::string::npos) {
    throw InvalidArgument(fmt::format("module id '{}' must be nonempty and contain no '.'", id_));
  }
}

void SimModule::attach(ExchangeZone* zone, std::map<std::string, std::string> input_slots) {
  for (const auto& [port, slot] : input_slots) {
    find_port(inputs_, port, "input");
    (void)slot;
  }
  zone_ = zone;
  input_slots_ = std::move(input_slots);
}

void SimModule::require(bool ok, const char* call) const {
  if (!ok) {
    throw LifecycleViolation(
        fmt::format("module '{}': {} not allowed in state {}", id_, call, to_string(state_)));
  }
}

void SimModule::initialize(Seconds t0) {
  require(state_ == Lifecycle::kCreated, "initialize");
  if (zone_ == nullptr) throw LifecycleViolation(fmt::format("module '{}' is not attached", id_));
  tick_ = 0;
  state_ = Lifecycle::kInitialized;
  on_initialize(t0);
}

void SimModule::enter_running(Tick tick, const char* call) {
  require(state_ == Lifecycle::kInitialized || state_ == Lifecycle::kRunning, call);
  state_ = Lifecycle::kRunning;
  tick_ = tick;
}

void SimModule::pre_step(Tick tick, Seconds t) {
  enter_running(tick, "pre_step");
  on_pre_step(t);
}

void SimModule::do_step(Tick tick, Seconds t, Seconds dt) {
  enter_running(tick, "do_step");
  if (dt <= 0) throw InvalidArgument(fmt::format("module '{}': dt must be positive", id_));
  on_step(t, dt);
}

void SimModule::post_step(Tick tick, Seconds t) {
  enter_running(tick, "post_step");
  on_post_step(t);
}

void SimModule::terminate() {
  require(state_ == Lifecycle::kInitialized || state_ == Lifecycle::kRunning, "terminate");
  state_ = Lifecycle::kTerminated;
  on_terminate();
}

const PortSpec& SimModule::find_port(const std::vector<PortSpec>& ports, const std::string& port,
                                     const char* direction) const {
  auto it = std::find_if(ports.begin(), ports.end(),
                         [&](const PortSpec& p) { return p.name == port; });
  if (it == ports.end()) {
    throw UndeclaredPort(fmt::format("module '{}' has no {} port '{}'", id_, direction, port));
  }
  return *it;
}

SlotValue SimModule::input_value(const std::string& port) const {
  const PortSpec& spec = find_port(inputs_, port, "input");
  auto it = input_slots_.find(port);
  if (it == input_slots_.end() || !zone_->contains(it->second)) return spec.default_value;
  return zone_->read(it->second).value;
}

bool SimModule::input_available(const std::string& port) const {
  find_port(inputs_, port, "input");
  auto it = input_slots_.find(port);
  return it != input_slots_.end() && zone_->contains(it->second);
}

void SimModule::output(const std::string& port, SlotValue value) {
  require(state_ == Lifecycle::kInitialized || state_ == Lifecycle::kRunning, "output");
  const PortSpec& spec = find_port(outputs_, port, "output");
  const std::string slot = slot_name(id_, port);
  if (value.kind() != spec.kind) {
    throw KindMismatch(fmt::format("slot '{}' expects a {}", slot, to_string(spec.kind)));
  }
  if (!value.finite()) {
    throw NonFiniteValue(
        fmt::format("non-finite value written to slot '{}' by module '{}' at tick {}", slot, id_,
                    tick_));
  }
  zone_->write(slot, std::move(value), id_, tick_);
}

}  // namespace dhcosim::engine
