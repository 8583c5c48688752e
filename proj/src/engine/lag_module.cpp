#include "dhcosim/engine/lag_module.hpp"

#include <cmath>

#include <fmt/format.h>

namespace dhcosim::engine {

LagModule::LagModule(std::string id, LagParams params)
    : SimModule(std::move(id), {{"u", SlotKind::kScalar, 0.0}}, {{"y", SlotKind::kScalar, 0.0}}),
      p_(params) {
  if (!(p_.tau > 0.0) || !std::isfinite(p_.tau)) {
    throw InvalidArgument(fmt::format("lag '{}': tau must be positive", this->id()));
  }
}

void LagModule::on_initialize(Seconds /*t0*/) {
  y_ = p_.init;
  output("y", y_);
}

void LagModule::on_step(Seconds /*t*/, Seconds dt) {
  const double target = p_.bias + p_.gain * input("u");
  y_ = target + (y_ - target) * std::exp(-static_cast<double>(dt) / p_.tau);
  output("y", y_);
}

}  // namespace dhcosim::engine
