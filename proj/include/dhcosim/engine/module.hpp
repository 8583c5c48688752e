#pragma once

#include <map>
#include <string>
#include <vector>

#include "dhcosim/core/errors.hpp"
#include "dhcosim/core/exchange_zone.hpp"
#include "dhcosim/core/time.hpp"

namespace dhcosim::engine {

DHCOSIM_DEFINE_ERROR(LifecycleViolation);
DHCOSIM_DEFINE_ERROR(UndeclaredPort);
DHCOSIM_DEFINE_ERROR(NonFiniteValue);

enum class Lifecycle { kCreated, kInitialized, kRunning, kTerminated };

const char* to_string(Lifecycle state);

struct PortSpec {
  std::string name;
  SlotKind kind = SlotKind::kScalar;
  // Value seen by the module while the wired slot has not been written yet,
  // or when the input is left unwired. Only meaningful for scalar ports.
  double default_value = 0.0;
};

// Slot name under which a module publishes one of its output ports.
std::string slot_name(const std::string& module_id, const std::string& port);

// Base class of every co-simulated component.
//
// The public lifecycle methods enforce the forward-only state machine and
// then call the protected hooks. Subclasses talk to the exchange zone only
// through input()/output(), which check the declared port lists.
class SimModule {
 public:
  SimModule(std::string id, std::vector<PortSpec> inputs, std::vector<PortSpec> outputs);
  virtual ~SimModule() = default;

  SimModule(const SimModule&) = delete;
  SimModule& operator=(const SimModule&) = delete;

  const std::string& id() const { return id_; }
  const std::vector<PortSpec>& inputs() const { return inputs_; }
  const std::vector<PortSpec>& outputs() const { return outputs_; }
  Lifecycle state() const { return state_; }

  // Connects the module to a zone. `input_slots` maps input port names to the
  // slot they read; unmapped inputs fall back to their default.
  void attach(ExchangeZone* zone, std::map<std::string, std::string> input_slots);
  const std::map<std::string, std::string>& input_slots() const { return input_slots_; }

  void initialize(Seconds t0);
  void pre_step(Tick tick, Seconds t);
  void do_step(Tick tick, Seconds t, Seconds dt);
  void post_step(Tick tick, Seconds t);
  void terminate();

 protected:
  virtual void on_initialize(Seconds /*t0*/) {}
  virtual void on_pre_step(Seconds /*t*/) {}
  virtual void on_step(Seconds t, Seconds dt) = 0;
  virtual void on_post_step(Seconds /*t*/) {}
  virtual void on_terminate() {}

  // Current value of a declared input.
  SlotValue input_value(const std::string& port) const;
  double input(const std::string& port) const { return input_value(port).scalar(); }
  // True when the input is wired to a slot that has already been written.
  bool input_available(const std::string& port) const;

  void output(const std::string& port, SlotValue value);

  Tick current_tick() const { return tick_; }

 private:
  const PortSpec& find_port(const std::vector<PortSpec>& ports, const std::string& port,
                            const char* direction) const;
  void require(bool ok, const char* call) const;
  void enter_running(Tick tick, const char* call);

  std::string id_;
  std::vector<PortSpec> inputs_;
  std::vector<PortSpec> outputs_;
  Lifecycle state_ = Lifecycle::kCreated;
  ExchangeZone* zone_ = nullptr;
  std::map<std::string, std::string> input_slots_;
  Tick tick_ = 0;
};

}  // namespace dhcosim::engine
