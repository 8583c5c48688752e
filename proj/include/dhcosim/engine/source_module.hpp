#pragma once

#include <map>
#include <string>

#include "dhcosim/core/time.hpp"
#include "dhcosim/engine/module.hpp"

namespace dhcosim::engine {

// Publishes recorded series as scalar outputs, one port per series, sampled
// at each step time (and at t0 during initialization).
class SeriesSource final : public SimModule {
 public:
  SeriesSource(std::string id, std::map<std::string, TimeVector> series,
               Interp mode = Interp::kHoldLast);

 protected:
  void on_initialize(Seconds t0) override { publish(t0); }
  void on_step(Seconds t, Seconds /*dt*/) override { publish(t); }

 private:
  void publish(Seconds t);

  std::map<std::string, TimeVector> series_;
  Interp mode_;
};

}  // namespace dhcosim::engine
