#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "dhcosim/core/time.hpp"

namespace dhcosim {

enum class SlotKind { kScalar, kTimeVector };

const char* to_string(SlotKind kind);

// A coupling value: either a scalar or a shared immutable time-vector.
class SlotValue {
 public:
  SlotValue(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  SlotValue(TimeVector tv)            // NOLINT(google-explicit-constructor)
      : value_(std::make_shared<const TimeVector>(std::move(tv))) {}
  SlotValue(std::shared_ptr<const TimeVector> tv) : value_(std::move(tv)) {}  // NOLINT

  SlotKind kind() const {
    return std::holds_alternative<double>(value_) ? SlotKind::kScalar
                                                  : SlotKind::kTimeVector;
  }
  double scalar() const;
  const TimeVector& vector() const;
  const std::shared_ptr<const TimeVector>& vector_ptr() const;

  // True when every number carried by the value is finite.
  bool finite() const;

  friend bool operator==(const SlotValue& a, const SlotValue& b);

 private:
  std::variant<double, std::shared_ptr<const TimeVector>> value_;
};

struct SlotEntry {
  SlotValue value;
  std::string producer;
  Tick last_write_tick;
};

struct SlotReading {
  SlotValue value;
  Tick last_write_tick;
};

// Shared table of module outputs. Each slot has a single producer: the first
// module that writes it owns it for the lifetime of the zone. Reads and writes
// are atomic per slot and may come from different threads.
class ExchangeZone {
 public:
  void write(const std::string& slot, SlotValue value,
             const std::string& producer, Tick tick);
  SlotReading read(const std::string& slot) const;

  bool contains(const std::string& slot) const;
  std::string producer_of(const std::string& slot) const;
  std::vector<std::string> slot_names() const;
  void clear();

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, SlotEntry> slots_;
};

}  // namespace dhcosim
