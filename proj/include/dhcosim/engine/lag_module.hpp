#pragma once

#include "dhcosim/engine/module.hpp"

namespace dhcosim::engine {

struct LagParams {
  double tau = 1.0;  // seconds
  double gain = 1.0;
  double bias = 0.0;
  double init = 0.0;
};

// First-order lag  tau * y' = bias + gain * u - y.
//
// The input is held constant over the coupling step and the ODE is
// integrated exactly, so the only discretization error in a coupled network
// of lags comes from the coupling period itself.
class LagModule final : public SimModule {
 public:
  LagModule(std::string id, LagParams params);

 protected:
  void on_initialize(Seconds t0) override;
  void on_step(Seconds t, Seconds dt) override;

 private:
  LagParams p_;
  double y_ = 0.0;
};

}  // namespace dhcosim::engine
