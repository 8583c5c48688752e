#include "dhcosim/engine/source_module.hpp"

namespace dhcosim::engine {

namespace {

std::vector<PortSpec> ports_of(const std::map<std::string, TimeVector>& series) {
  std::vector<PortSpec> out;
  for (const auto& [name, tv] : series) out.push_back({name, SlotKind::kScalar, 0.0});
  return out;
}

}  // namespace

SeriesSource::SeriesSource(std::string id, std::map<std::string, TimeVector> series, Interp mode)
    : SimModule(std::move(id), {}, ports_of(series)), series_(std::move(series)), mode_(mode) {}

void SeriesSource::publish(Seconds t) {
  for (const auto& [name, tv] : series_) output(name, tv_sample(tv, t, mode_));
}

}  // namespace dhcosim::engine
