#include "dhcosim/plants/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace dhcosim::plants {

namespace {

double gauss_bump(double x, double centre, double width) {
  const double d = (x - centre) / width;
  return std::exp(-0.5 * d * d);
}

}  // namespace

TimeVector synthetic_load(const SyntheticLoadSpec& spec) {
  if (spec.n_steps <= 0 || spec.step <= 0) throw InvalidArgument("load needs n_steps, step > 0");
  if (!(spec.annual_mwh > 0.0)) throw InvalidArgument("annual_mwh must be positive");
  if (spec.seasonal_amplitude < 0.0 || spec.seasonal_amplitude >= 1.0) {
    throw InvalidArgument("seasonal_amplitude must lie in [0, 1)");
  }
  if (spec.noise < 0.0 || spec.noise >= 0.3) throw InvalidArgument("noise must lie in [0, 0.3)");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Seconds> times(spec.n_steps);
  std::vector<double> raw(spec.n_steps);
  for (int i = 0; i < spec.n_steps; ++i) {
    const Seconds t = spec.origin + i * spec.step;
    times[i] = t;
    const double day = static_cast<double>(t % kYearS) / 86400.0;
    const double hour = static_cast<double>(t % 86400) / 3600.0;
    // Coldest around mid January.
    const double season =
        1.0 + spec.seasonal_amplitude * std::cos(2.0 * std::numbers::pi * (day - 15.0) / 365.0);
    const double daily = 0.85 + spec.morning_peak * gauss_bump(hour, 7.0, 1.5) +
                         spec.evening_peak * gauss_bump(hour, 19.0, 2.0);
    const double eps = std::clamp(gauss(rng), -3.0, 3.0) * spec.noise;
    raw[i] = season * daily * (1.0 + eps);
  }

  const double dt_h = static_cast<double>(spec.step) / 3600.0;
  const double covered_h = dt_h * spec.n_steps;
  const double target = spec.annual_mwh * covered_h / 8760.0;
  double energy = 0.0;
  for (double v : raw) energy += v * dt_h;
  const double scale = target / energy;
  double peak = 0.0;
  for (double& v : raw) {
    v *= scale;
    peak = std::max(peak, v);
  }
  if (peak > spec.max_peak_mw) {
    throw SpecInfeasible(fmt::format(
        "synthetic load peaks at {:.3f} MW, above the {:.3f} MW the plant can serve", peak,
        spec.max_peak_mw));
  }
  return TimeVector(std::move(times), std::move(raw), "MW");
}

TimeVector synthetic_price(const PriceSpec& spec) {
  if (spec.n_steps <= 0 || spec.step <= 0) throw InvalidArgument("price needs n_steps, step > 0");
  if (!(spec.off_peak > 0.0 && spec.peak > 0.0)) throw InvalidArgument("prices must be positive");
  if (spec.noise < 0.0 || spec.noise >= 0.3) throw InvalidArgument("noise must lie in [0, 0.3)");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<Seconds> times(spec.n_steps);
  std::vector<double> values(spec.n_steps);
  for (int i = 0; i < spec.n_steps; ++i) {
    const Seconds t = spec.origin + i * spec.step;
    const int hour = static_cast<int>((t % 86400) / 3600);
    const bool peak = hour >= spec.peak_start_h && hour < spec.peak_end_h;
    times[i] = t;
    values[i] = (peak ? spec.peak : spec.off_peak) * (1.0 + spec.noise * jitter(rng));
  }
  return TimeVector(std::move(times), std::move(values), "EUR/MWh");
}

TimeVector extend_cyclic(const TimeVector& tv, Seconds period, Seconds extra) {
  if (period <= 0 || extra < 0) throw InvalidArgument("extend_cyclic needs period > 0, extra >= 0");
  if (tv.back_time() >= tv.front_time() + period) {
    throw InvalidArgument("series is longer than the wrap period");
  }
  std::vector<Seconds> t(tv.times().begin(), tv.times().end());
  std::vector<double> v(tv.values().begin(), tv.values().end());
  const Seconds end = tv.front_time() + period + extra;
  for (Seconds shift = period; tv.front_time() + shift < end; shift += period) {
    for (std::size_t i = 0; i < tv.size() && tv.times()[i] + shift < end; ++i) {
      t.push_back(tv.times()[i] + shift);
      v.push_back(tv.values()[i]);
    }
  }
  return TimeVector(std::move(t), std::move(v), tv.unit());
}

TimeVector refine_hold(const TimeVector& tv, Seconds step) {
  if (step <= 0) throw InvalidArgument("refine_hold needs step > 0");
  std::vector<Seconds> t;
  std::vector<double> v;
  for (std::size_t i = 0; i < tv.size(); ++i) {
    // The last sample lasts as long as the one before it.
    const Seconds end = i + 1 < tv.size() ? tv.times()[i + 1]
                        : i > 0           ? 2 * tv.times()[i] - tv.times()[i - 1]
                                          : tv.times()[i] + step;
    for (Seconds s = tv.times()[i]; s < end; s += step) {
      t.push_back(s);
      v.push_back(tv.values()[i]);
    }
  }
  return TimeVector(std::move(t), std::move(v), tv.unit());
}

}  // namespace dhcosim::plants
