#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dhcosim {

// Absolute times and durations are integer seconds. Nothing in the library
// accumulates time in floating point.
using Seconds = std::int64_t;
using Tick = std::int64_t;

// Fixed-step clock: time(tick) = origin + tick * base_period.
class TimeGrid {
 public:
  TimeGrid(Seconds origin, Seconds base_period);

  Seconds origin() const { return origin_; }
  Seconds base_period() const { return base_period_; }
  Tick tick() const { return tick_; }
  Seconds now() const { return time_at(tick_); }
  Seconds time_at(Tick tick) const { return origin_ + tick * base_period_; }

  void advance() { ++tick_; }
  void reset() { tick_ = 0; }

  // Number of whole ticks in [origin, t_end]; throws if t_end is off-grid.
  Tick ticks_until(Seconds t_end) const;

 private:
  Seconds origin_;
  Seconds base_period_;
  Tick tick_ = 0;
};

enum class Interp { kHoldLast, kLinear };

Interp parse_interp(const std::string& name);

// Immutable timestamped series. Times are strictly increasing, never empty.
class TimeVector {
 public:
  TimeVector(std::vector<Seconds> times, std::vector<double> values,
             std::string unit = {});

  std::span<const Seconds> times() const { return times_; }
  std::span<const double> values() const { return values_; }
  const std::string& unit() const { return unit_; }
  std::size_t size() const { return times_.size(); }
  Seconds front_time() const { return times_.front(); }
  Seconds back_time() const { return times_.back(); }

  // Exact lookup of a sample time; npos when absent.
  std::size_t find(Seconds t) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const TimeVector&, const TimeVector&) = default;

 private:
  std::vector<Seconds> times_;
  std::vector<double> values_;
  std::string unit_;
};

// Drops the points strictly before front_time() + dt.
TimeVector tv_shift(const TimeVector& tv, Seconds dt);

double tv_sample(const TimeVector& tv, Seconds t, Interp mode);

// Merges `update` into `base`; samples of `update` win on equal times.
TimeVector tv_overlay(const TimeVector& base, const TimeVector& update);

// Points with time in [from, to).
TimeVector tv_slice(const TimeVector& tv, Seconds from, Seconds to);

// CSV form: header `time,value`, integer epoch seconds.
TimeVector read_time_vector_csv(const std::filesystem::path& path,
                                std::string unit = {});
TimeVector parse_time_vector_csv(std::istream& in, std::string unit = {});
void write_time_vector_csv(const std::filesystem::path& path,
                           std::span<const Seconds> times,
                           std::span<const double> values);
void write_time_vector_csv(const std::filesystem::path& path,
                           const TimeVector& tv);

}  // namespace dhcosim
