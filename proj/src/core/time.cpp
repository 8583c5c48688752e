#include "dhcosim/core/time.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>

#include "dhcosim/core/errors.hpp"

namespace dhcosim {

TimeGrid::TimeGrid(Seconds origin, Seconds base_period)
    : origin_(origin), base_period_(base_period) {
  if (base_period <= 0) {
    throw InvalidArgument(
        fmt::format("base period must be positive, got {}", base_period));
  }
}

Tick TimeGrid::ticks_until(Seconds t_end) const {
  const Seconds span = t_end - origin_;
  if (span < 0 || span % base_period_ != 0) {
    throw InvalidArgument(fmt::format(
        "end time {} is not origin {} plus a whole number of {} s periods",
        t_end, origin_, base_period_));
  }
  return span / base_period_;
}

Interp parse_interp(const std::string& name) {
  if (name == "hold" || name == "hold-last" || name == "hold_last") {
    return Interp::kHoldLast;
  }
  if (name == "linear") return Interp::kLinear;
  throw InvalidArgument("unknown interpolation mode '" + name + "'");
}

TimeVector::TimeVector(std::vector<Seconds> times, std::vector<double> values,
                       std::string unit)
    : times_(std::move(times)),
      values_(std::move(values)),
      unit_(std::move(unit)) {
  if (times_.empty()) throw InvalidArgument("time vector must not be empty");
  if (times_.size() != values_.size()) {
    throw InvalidArgument(fmt::format("time vector has {} times but {} values",
                                      times_.size(), values_.size()));
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (times_[i] <= times_[i - 1]) {
      throw InvalidArgument(fmt::format(
          "time vector times must be strictly increasing (index {}: {} after {})",
          i, times_[i], times_[i - 1]));
    }
  }
}

std::size_t TimeVector::find(Seconds t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return npos;
  return static_cast<std::size_t>(it - times_.begin());
}

TimeVector tv_shift(const TimeVector& tv, Seconds dt) {
  if (dt < 0) throw InvalidArgument("shift must be nonnegative");
  if (dt > tv.back_time() - tv.front_time()) {
    throw AllPointsExpired(fmt::format(
        "shift of {} s expires every point of a {} s span", dt,
        tv.back_time() - tv.front_time()));
  }
  const Seconds new_origin = tv.front_time() + dt;
  auto times = tv.times();
  auto first = std::lower_bound(times.begin(), times.end(), new_origin);
  const auto offset = first - times.begin();
  return TimeVector({first, times.end()},
                    {tv.values().begin() + offset, tv.values().end()},
                    tv.unit());
}

double tv_sample(const TimeVector& tv, Seconds t, Interp mode) {
  if (t < tv.front_time() || t > tv.back_time()) {
    throw OutOfRange(fmt::format("sample time {} outside [{}, {}]", t,
                                 tv.front_time(), tv.back_time()));
  }
  auto times = tv.times();
  auto values = tv.values();
  // Greatest sample time <= t.
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i = static_cast<std::size_t>(it - times.begin()) - 1;
  if (times[i] == t || mode == Interp::kHoldLast) return values[i];
  const double w = static_cast<double>(t - times[i]) /
                   static_cast<double>(times[i + 1] - times[i]);
  return values[i] + w * (values[i + 1] - values[i]);
}

TimeVector tv_overlay(const TimeVector& base, const TimeVector& update) {
  std::vector<Seconds> times;
  std::vector<double> values;
  times.reserve(base.size() + update.size());
  values.reserve(base.size() + update.size());
  std::size_t i = 0, j = 0;
  auto bt = base.times();
  auto ut = update.times();
  while (i < bt.size() || j < ut.size()) {
    if (j == ut.size() || (i < bt.size() && bt[i] < ut[j])) {
      times.push_back(bt[i]);
      values.push_back(base.values()[i]);
      ++i;
    } else {
      if (i < bt.size() && bt[i] == ut[j]) ++i;
      times.push_back(ut[j]);
      values.push_back(update.values()[j]);
      ++j;
    }
  }
  return TimeVector(std::move(times), std::move(values), base.unit());
}

TimeVector tv_slice(const TimeVector& tv, Seconds from, Seconds to) {
  auto times = tv.times();
  auto lo = std::lower_bound(times.begin(), times.end(), from);
  auto hi = std::lower_bound(times.begin(), times.end(), to);
  if (lo >= hi) {
    throw OutOfRange(fmt::format("no samples in [{}, {})", from, to));
  }
  const auto a = lo - times.begin();
  const auto b = hi - times.begin();
  return TimeVector({lo, hi},
                    {tv.values().begin() + a, tv.values().begin() + b},
                    tv.unit());
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

TimeVector parse_time_vector_csv(std::istream& in, std::string unit) {
  std::string line;
  int line_no = 0;
  std::vector<Seconds> times;
  std::vector<double> values;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      if (view != "time,value") {
        throw IoError(fmt::format("line {}: expected header 'time,value'",
                                  line_no));
      }
      header_seen = true;
      continue;
    }
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) {
      throw IoError(fmt::format("line {}: expected 'time,value'", line_no));
    }
    auto ts = trim(view.substr(0, comma));
    auto vs = trim(view.substr(comma + 1));
    Seconds t = 0;
    double v = 0.0;
    auto r1 = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    auto r2 = std::from_chars(vs.data(), vs.data() + vs.size(), v);
    if (r1.ec != std::errc() || r1.ptr != ts.data() + ts.size() ||
        r2.ec != std::errc() || r2.ptr != vs.data() + vs.size()) {
      throw IoError(fmt::format("line {}: malformed sample '{}'", line_no,
                                std::string(view)));
    }
    times.push_back(t);
    values.push_back(v);
  }
  if (!header_seen) throw IoError("missing 'time,value' header");
  try {
    return TimeVector(std::move(times), std::move(values), std::move(unit));
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
}

TimeVector read_time_vector_csv(const std::filesystem::path& path,
                                std::string unit) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_time_vector_csv(in, std::move(unit));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_time_vector_csv(const std::filesystem::path& path,
                           std::span<const Seconds> times,
                           std::span<const double> values) {
  auto out = fmt::output_file(path.string());
  out.print("time,value\n");
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.print("{},{}\n", times[i], values[i]);
  }
}

void write_time_vector_csv(const std::filesystem::path& path,
                           const TimeVector& tv) {
  write_time_vector_csv(path, tv.times(), tv.values());
}

}  // namespace dhcosim
