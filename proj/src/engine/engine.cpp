#include "dhcosim/engine/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>
#include <set>
#include <thread>

namespace dhcosim::engine {

ModuleStepFailure::ModuleStepFailure(std::string module, Tick tick, std::string inner_code,
                                     const std::string& inner_what)
    : Error("ModuleStepFailure",
            fmt::format("module '{}' failed at tick {}: [{}] {}", module, tick, inner_code,
                        inner_what)),
      module_(std::move(module)),
      tick_(tick),
      inner_code_(std::move(inner_code)) {}

void validate_sequences(const std::vector<SequenceSpec>& sequences) {
  std::set<std::string> names;
  std::map<std::string, std::string> owner;
  for (const SequenceSpec& seq : sequences) {
    if (seq.multiplier < 1) {
      throw InvalidArgument(
          fmt::format("sequence '{}' has multiplier {} (must be >= 1)", seq.name, seq.multiplier));
    }
    if (!names.insert(seq.name).second) {
      throw InvalidArgument(fmt::format("duplicate sequence name '{}'", seq.name));
    }
    for (const std::string& m : seq.modules) {
      auto [it, fresh] = owner.emplace(m, seq.name);
      if (!fresh) {
        throw DuplicateModuleAssignment(fmt::format(
            "module '{}' is listed in sequences '{}' and '{}'", m, it->second, seq.name));
      }
    }
  }
}

Schedule build_schedule(const std::vector<SequenceSpec>& sequences, Tick n_ticks) {
  validate_sequences(sequences);
  Schedule plan;
  for (Tick t = 0; t < n_ticks; ++t) {
    TickFiring firing{t, {}};
    for (const SequenceSpec& seq : sequences) {
      if (t % seq.multiplier == 0) firing.sequences.push_back(seq.name);
    }
    if (!firing.sequences.empty()) plan.push_back(std::move(firing));
  }
  return plan;
}

const Series& RunResults::at(const std::string& slot) const {
  auto it = series.find(slot);
  if (it == series.end()) throw UnknownSlot(fmt::format("slot '{}' was never written", slot));
  return it->second;
}

double RunResults::final_scalar(const std::string& slot) const {
  auto it = final_values.find(slot);
  if (it == final_values.end()) {
    throw UnknownSlot(fmt::format("slot '{}' was never written", slot));
  }
  return it->second.scalar();
}

Tick tick_count(const Simulation& sim) {
  if (sim.base_period <= 0) throw InvalidArgument("base_period must be positive");
  if (sim.duration <= 0 || sim.duration % sim.base_period != 0) {
    throw InvalidArgument(fmt::format("duration {} s is not a positive multiple of the base period {} s",
                                      sim.duration, sim.base_period));
  }
  return sim.duration / sim.base_period;
}

namespace {

using Instances = std::map<std::string, std::unique_ptr<SimModule>>;

Instances instantiate(const Simulation& sim) {
  Instances out;
  for (const auto& [id, factory] : sim.modules) {
    auto m = factory();
    if (!m) throw InvalidArgument(fmt::format("factory for module '{}' returned nothing", id));
    if (m->id() != id) {
      throw InvalidArgument(
          fmt::format("factory registered as '{}' built module '{}'", id, m->id()));
    }
    out.emplace(id, std::move(m));
  }
  return out;
}

const PortSpec* find(const std::vector<PortSpec>& ports, const std::string& name) {
  for (const PortSpec& p : ports) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::pair<std::string, std::string> split_port(const std::string& ref) {
  const auto dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw WiringError(fmt::format("'{}' is not of the form module.port", ref));
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

void validate_with(const Simulation& sim, const Instances& inst) {
  tick_count(sim);
  validate_sequences(sim.sequences);
  std::set<std::string> scheduled;
  for (const SequenceSpec& seq : sim.sequences) {
    for (const std::string& m : seq.modules) {
      if (!inst.count(m)) {
        throw InvalidArgument(fmt::format("sequence '{}' lists unknown module '{}'", seq.name, m));
      }
      scheduled.insert(m);
    }
  }
  for (const auto& [id, m] : inst) {
    if (!scheduled.count(id)) {
      throw InvalidArgument(fmt::format("module '{}' is not assigned to any sequence", id));
    }
  }
  for (const auto& [dst, src] : sim.wiring) {
    const auto [dst_mod, dst_port] = split_port(dst);
    auto dm = inst.find(dst_mod);
    if (dm == inst.end()) {
      throw WiringError(fmt::format("wiring target '{}' names unknown module '{}'", dst, dst_mod));
    }
    const PortSpec* in = find(dm->second->inputs(), dst_port);
    if (in == nullptr) {
      throw WiringError(fmt::format("wiring target '{}': module has no input '{}'", dst, dst_port));
    }
    const auto [src_mod, src_port] = split_port(src);
    auto sm = inst.find(src_mod);
    const PortSpec* out = sm == inst.end() ? nullptr : find(sm->second->outputs(), src_port);
    if (out == nullptr) {
      throw WiringError(fmt::format("wiring '{}' reads slot '{}' which no module produces", dst, src));
    }
    if (out->kind != in->kind) {
      throw WiringError(fmt::format("wiring '{}' <- '{}': kind mismatch ({} vs {})", dst, src,
                                    to_string(in->kind), to_string(out->kind)));
    }
  }
}

struct Scheduled {
  SimModule* module;
  int multiplier;
};

// Maps any escaping exception to a ModuleStepFailure tagged with the module.
template <class F>
void guarded(const std::string& module, Tick tick, F&& f) {
  try {
    f();
  } catch (const ModuleStepFailure&) {
    throw;
  } catch (const Error& e) {
    throw ModuleStepFailure(module, tick, e.code(), e.what());
  } catch (const std::exception& e) {
    throw ModuleStepFailure(module, tick, "Exception", e.what());
  }
}

void step_module(const Scheduled& s, Tick tick, Seconds t, Seconds base) {
  guarded(s.module->id(), tick, [&] {
    s.module->pre_step(tick, t);
    s.module->do_step(tick, t, base * s.multiplier);
    s.module->post_step(tick, t);
  });
}

}  // namespace

void validate_simulation(const Simulation& sim) { validate_with(sim, instantiate(sim)); }

RunResults run(const Simulation& sim, RunObserver* observer) {
  Instances inst = instantiate(sim);
  validate_with(sim, inst);
  const Tick n_ticks = tick_count(sim);

  ExchangeZone zone;
  std::map<std::string, std::map<std::string, std::string>> inputs_of;
  for (const auto& [dst, src] : sim.wiring) {
    const auto [mod, port] = split_port(dst);
    inputs_of[mod][port] = src;
  }
  std::vector<std::vector<Scheduled>> per_sequence;
  std::vector<SimModule*> order;
  for (const SequenceSpec& seq : sim.sequences) {
    auto& list = per_sequence.emplace_back();
    for (const std::string& id : seq.modules) {
      SimModule* m = inst.at(id).get();
      m->attach(&zone, inputs_of[id]);
      list.push_back({m, seq.multiplier});
      order.push_back(m);
    }
  }
  if (observer != nullptr) {
    std::map<std::string, SimModule*> view;
    for (auto& [id, m] : inst) view.emplace(id, m.get());
    observer->on_start(view);
  }

  // Slots read by each module, for the parallel isolation test.
  std::map<const SimModule*, std::set<std::string>> reads;
  for (SimModule* m : order) {
    for (const auto& [port, slot] : m->input_slots()) reads[m].insert(slot);
  }

  RunResults results;
  results.ticks = n_ticks;
  std::vector<SimModule*> initialized;
  auto shutdown = [&] {
    for (SimModule* m : initialized) {
      try {
        if (m->state() != Lifecycle::kTerminated) m->terminate();
      } catch (...) {
        // The original failure is what gets reported.
      }
    }
  };

  try {
    for (SimModule* m : order) {
      guarded(m->id(), 0, [&] { m->initialize(sim.origin); });
      initialized.push_back(m);
    }
    for (Tick tick = 0; tick < n_ticks; ++tick) {
      const Seconds t = sim.origin + tick * sim.base_period;
      std::vector<Scheduled> firing;
      for (std::size_t s = 0; s < sim.sequences.size(); ++s) {
        if (tick % sim.sequences[s].multiplier != 0) continue;
        firing.insert(firing.end(), per_sequence[s].begin(), per_sequence[s].end());
      }

      if (sim.parallel && firing.size() > 1) {
        // A module is isolated when it neither reads nor feeds any other
        // module firing in this tick, so its position in the order is
        // irrelevant and it can run concurrently.
        std::set<std::string> produced_here;
        for (const Scheduled& s : firing) {
          for (const PortSpec& p : s.module->outputs()) {
            produced_here.insert(slot_name(s.module->id(), p.name));
          }
        }
        std::set<std::string> read_here;
        for (const Scheduled& s : firing) {
          read_here.insert(reads[s.module].begin(), reads[s.module].end());
        }
        std::vector<Scheduled> isolated, coupled;
        for (const Scheduled& s : firing) {
          bool alone = true;
          for (const std::string& slot : reads[s.module]) {
            if (produced_here.count(slot) && slot.rfind(s.module->id() + ".", 0) != 0) alone = false;
          }
          for (const PortSpec& p : s.module->outputs()) {
            if (read_here.count(slot_name(s.module->id(), p.name))) alone = false;
          }
          (alone ? isolated : coupled).push_back(s);
        }
        std::vector<std::exception_ptr> errors(isolated.size());
        std::vector<std::thread> workers;
        for (std::size_t k = 0; k < isolated.size(); ++k) {
          workers.emplace_back([&, k] {
            try {
              step_module(isolated[k], tick, t, sim.base_period);
            } catch (...) {
              errors[k] = std::current_exception();
            }
          });
        }
        for (auto& w : workers) w.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (const Scheduled& s : coupled) step_module(s, tick, t, sim.base_period);
      } else {
        for (const Scheduled& s : firing) step_module(s, tick, t, sim.base_period);
      }

      for (const Scheduled& s : firing) {
        for (const PortSpec& p : s.module->outputs()) {
          if (p.kind != SlotKind::kScalar) continue;
          const std::string slot = slot_name(s.module->id(), p.name);
          if (!zone.contains(slot)) continue;
          const SlotReading r = zone.read(slot);
          if (r.last_write_tick != tick) continue;
          Series& ser = results.series[slot];
          ser.times.push_back(t);
          ser.values.push_back(r.value.scalar());
        }
      }
      if (observer != nullptr) observer->on_tick_end(tick, zone);
    }
  } catch (...) {
    shutdown();
    throw;
  }
  for (SimModule* m : order) {
    guarded(m->id(), n_ticks, [&] { m->terminate(); });
  }
  for (const std::string& slot : zone.slot_names()) {
    results.final_values.emplace(slot, zone.read(slot).value);
  }
  return results;
}

void write_probe_csvs(const RunResults& results, const std::vector<std::string>& probes,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const std::string& probe : probes) {
    const Series& s = results.at(probe);
    write_time_vector_csv(dir / (probe + ".csv"), s.times, s.values);
  }
}

ConvergenceReport convergence_study(const Simulation& sim, const std::vector<int>& multipliers,
                                    const std::vector<std::string>& probes) {
  if (multipliers.empty()) throw InvalidArgument("convergence study needs at least one multiplier");
  ConvergenceReport report;
  for (int m : multipliers) {
    if (m < 1) throw InvalidArgument(fmt::format("multiplier {} must be >= 1", m));
    Simulation scaled = sim;
    for (SequenceSpec& seq : scaled.sequences) {
      seq.multiplier *= m;
      const Seconds period = sim.base_period * seq.multiplier;
      if (sim.duration % period != 0) {
        throw InvalidArgument(fmt::format(
            "coupling period {} s of sequence '{}' does not divide the duration {} s", period,
            seq.name, sim.duration));
      }
    }
    RunResults r = run(scaled);
    ConvergenceRow row{m, sim.base_period * m, {}};
    for (const std::string& probe : probes) row.final_values[probe] = r.final_scalar(probe);
    report.rows.push_back(std::move(row));
  }
  for (const std::string& probe : probes) {
    auto& diffs = report.differences[probe];
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      diffs.push_back(std::abs(report.rows[i].final_values.at(probe) -
                               report.rows[i - 1].final_values.at(probe)));
    }
  }
  return report;
}

}  // namespace dhcosim::engine
