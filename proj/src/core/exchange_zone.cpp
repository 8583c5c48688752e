#include "dhcosim/core/exchange_zone.hpp"

#include <fmt/format.h>

#include <cmath>
#include <mutex>

#include "dhcosim/core/errors.hpp"

namespace dhcosim {

const char* to_string(SlotKind kind) {
  return kind == SlotKind::kScalar ? "scalar" : "time-vector";
}

double SlotValue::scalar() const {
  if (const double* v = std::get_if<double>(&value_)) return *v;
  throw KindMismatch("slot holds a time-vector, not a scalar");
}

const TimeVector& SlotValue::vector() const { return *vector_ptr(); }

const std::shared_ptr<const TimeVector>& SlotValue::vector_ptr() const {
  if (auto* p = std::get_if<std::shared_ptr<const TimeVector>>(&value_)) {
    return *p;
  }
  throw KindMismatch("slot holds a scalar, not a time-vector");
}

bool SlotValue::finite() const {
  if (const double* v = std::get_if<double>(&value_)) return std::isfinite(*v);
  for (double x : vector().values()) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool operator==(const SlotValue& a, const SlotValue& b) {
  if (a.kind() != b.kind()) return false;
  if (a.kind() == SlotKind::kScalar) return a.scalar() == b.scalar();
  return a.vector() == b.vector();
}

void ExchangeZone::write(const std::string& slot, SlotValue value,
                         const std::string& producer, Tick tick) {
  std::unique_lock lock(mutex_);
  auto it = slots_.find(slot);
  if (it == slots_.end()) {
    slots_.emplace(slot, SlotEntry{std::move(value), producer, tick});
    return;
  }
  if (it->second.producer != producer) {
    throw NotProducer(fmt::format("slot '{}' is owned by '{}', rejected write from '{}'",
                                  slot, it->second.producer, producer));
  }
  it->second.value = std::move(value);
  it->second.last_write_tick = tick;
}

SlotReading ExchangeZone::read(const std::string& slot) const {
  std::shared_lock lock(mutex_);
  auto it = slots_.find(slot);
  if (it == slots_.end()) throw UnknownSlot("unknown slot '" + slot + "'");
  return {it->second.value, it->second.last_write_tick};
}

bool ExchangeZone::contains(const std::string& slot) const {
  std::shared_lock lock(mutex_);
  return slots_.count(slot) != 0;
}

std::string ExchangeZone::producer_of(const std::string& slot) const {
  std::shared_lock lock(mutex_);
  auto it = slots_.find(slot);
  if (it == slots_.end()) throw UnknownSlot("unknown slot '" + slot + "'");
  return it->second.producer;
}

std::vector<std::string> ExchangeZone::slot_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> names;
  names.reserve(slots_.size());
  for (const auto& [name, entry] : slots_) names.push_back(name);
  return names;
}

void ExchangeZone::clear() {
  std::unique_lock lock(mutex_);
  slots_.clear();
}

}  // namespace dhcosim
