#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dhcosim/engine/module.hpp"

namespace dhcosim::engine {

DHCOSIM_DEFINE_ERROR(DuplicateModuleAssignment);
DHCOSIM_DEFINE_ERROR(WiringError);

// Wraps any error thrown by a module while the master loop is running.
class ModuleStepFailure : public Error {
 public:
  ModuleStepFailure(std::string module, Tick tick, std::string inner_code,
                    const std::string& inner_what);

  const std::string& module() const { return module_; }
  Tick tick() const { return tick_; }
  // code() of the wrapped error, so callers can still tell failures apart.
  const std::string& inner_code() const { return inner_code_; }

 private:
  std::string module_;
  Tick tick_;
  std::string inner_code_;
};

struct SequenceSpec {
  std::string name;
  int multiplier = 1;
  std::vector<std::string> modules;
};

struct TickFiring {
  Tick tick;
  std::vector<std::string> sequences;
};

using Schedule = std::vector<TickFiring>;

// Checks the sequence list (multipliers >= 1, unique names, each module in
// at most one sequence).
void validate_sequences(const std::vector<SequenceSpec>& sequences);

// Firing plan for ticks [0, n_ticks). Ticks where nothing fires are omitted.
Schedule build_schedule(const std::vector<SequenceSpec>& sequences, Tick n_ticks);

using ModuleFactory = std::function<std::unique_ptr<SimModule>()>;

struct Simulation {
  Seconds origin = 0;
  Seconds base_period = 1;
  Seconds duration = 0;
  std::vector<SequenceSpec> sequences;
  // Builds a fresh instance per run, keyed by module id.
  std::map<std::string, ModuleFactory> modules;
  // "module.port" of an input -> slot name it reads.
  std::map<std::string, std::string> wiring;
  // Dispatch modules that are isolated within a tick on worker threads.
  bool parallel = false;
};

struct Series {
  std::vector<Seconds> times;
  std::vector<double> values;

  friend bool operator==(const Series&, const Series&) = default;
};

struct RunResults {
  Tick ticks = 0;
  // One entry per scalar slot, sampled at every tick where it was written.
  // Each sample is stamped with the time of the tick that wrote it.
  std::map<std::string, Series> series;
  // Value of every slot at the end of the run (time-vector slots included).
  std::map<std::string, SlotValue> final_values;

  const Series& at(const std::string& slot) const;
  double final_scalar(const std::string& slot) const;

  friend bool operator==(const RunResults&, const RunResults&) = default;
};

// Validates the full simulation description without running it.
void validate_simulation(const Simulation& sim);

// Number of base ticks covered by the simulation.
Tick tick_count(const Simulation& sim);

struct RunObserver {
  virtual ~RunObserver() = default;
  // Called after every module has been constructed and attached.
  virtual void on_start(const std::map<std::string, SimModule*>& /*modules*/) {}
  virtual void on_tick_end(Tick /*tick*/, const ExchangeZone& /*zone*/) {}
};

RunResults run(const Simulation& sim, RunObserver* observer = nullptr);

// Writes one `time,value` CSV per probe slot into `dir`.
void write_probe_csvs(const RunResults& results, const std::vector<std::string>& probes,
                      const std::filesystem::path& dir);

struct ConvergenceRow {
  int multiplier;
  Seconds coupling_period;
  std::map<std::string, double> final_values;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  // differences[slot][i] = |final(rows[i+1]) - final(rows[i])|
  std::map<std::string, std::vector<double>> differences;
};

// Runs `sim` once per multiplier with every sequence multiplier scaled by it.
ConvergenceReport convergence_study(const Simulation& sim, const std::vector<int>& multipliers,
                                    const std::vector<std::string>& probes);

}  // namespace dhcosim::engine
