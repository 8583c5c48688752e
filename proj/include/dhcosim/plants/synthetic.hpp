#pragma once

#include <cstdint>

#include "dhcosim/core/errors.hpp"
#include "dhcosim/core/time.hpp"

namespace dhcosim::plants {

DHCOSIM_DEFINE_ERROR(SpecInfeasible);

constexpr Seconds kHourS = 3600;
constexpr Seconds kYearS = 8760 * kHourS;

// Heat demand shaped as a winter-peaking seasonal sinusoid times a daily
// profile with a morning and an evening peak, times (1 + seeded noise).
// The series is scaled so that its energy equals annual_mwh prorated to the
// covered duration.
struct SyntheticLoadSpec {
  double annual_mwh = 21217.0;
  Seconds origin = 0;
  Seconds step = kHourS;
  int n_steps = 8760;
  double seasonal_amplitude = 0.55;
  double morning_peak = 0.35;
  double evening_peak = 0.25;
  double noise = 0.05;
  std::uint64_t seed = 1;
  // Largest load the plant can serve. Exceeding it raises SpecInfeasible.
  double max_peak_mw = 13.85;
};

TimeVector synthetic_load(const SyntheticLoadSpec& spec);

// Two-level electricity tariff: `peak` between peak_start_h and peak_end_h,
// `off_peak` otherwise, each scaled by (1 + seeded noise).
struct PriceSpec {
  Seconds origin = 0;
  Seconds step = 900;
  int n_steps = 4 * 8760;
  double off_peak = 40.0;
  double peak = 120.0;
  int peak_start_h = 7;
  int peak_end_h = 21;
  double noise = 0.03;
  std::uint64_t seed = 2;
};

TimeVector synthetic_price(const PriceSpec& spec);

// Appends `extra` seconds of samples by repeating the series from its start,
// so the copy at t + period has the value at t. `period` must equal the
// series span plus one step.
TimeVector extend_cyclic(const TimeVector& tv, Seconds period, Seconds extra);

// Resamples onto a finer grid by holding each value until the next sample.
TimeVector refine_hold(const TimeVector& tv, Seconds step);

}  // namespace dhcosim::plants
