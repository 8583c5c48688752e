// Block library: port/parameter declarations and per-step update rules.

#include "blocks.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dhcosim::logic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<BlockType> make_library() {
  const std::vector<std::string> y{"y"};
  return {
      {"input", {}, y, {{"default", 0.0, false}}},
      {"output", {{"u", 0.0}}, y, {}},
      {"const", {}, y, {{"value", 0.0, true}}},
      {"gain", {{"u", 0.0}}, y, {{"k", 1.0, true}}},
      {"sum",
       {{"a", 0.0}, {"b", 0.0}, {"c", 0.0}, {"d", 0.0}},
       y,
       {{"ka", 1.0, false}, {"kb", 1.0, false}, {"kc", 1.0, false}, {"kd", 1.0, false}}},
      {"mul", {{"a", 1.0}, {"b", 1.0}}, y, {}},
      {"min", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"max", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"saturation", {{"u", 0.0}}, y, {{"min", 0.0, true}, {"max", 0.0, true}}},
      {"pid",
       {{"sp", 0.0}, {"pv", 0.0}},
       y,
       {{"kp", 0.0, false},
        {"ki", 0.0, false},
        {"kd", 0.0, false},
        {"min", -kInf, false},
        {"max", kInf, false}}},
      {"switch", {{"cond", 0.0}, {"a", 0.0}, {"b", 0.0}}, y, {}},
      {"gt", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"ge", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"lt", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"le", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"hysteresis",
       {{"u", 0.0}},
       y,
       {{"on", 0.0, true}, {"off", 0.0, true}, {"init", 0.0, false}}},
      {"filter", {{"u", 0.0}}, y, {{"tau", 0.0, true}, {"init", 0.0, false}}},
      {"delay", {{"u", 0.0}}, y, {{"init", 0.0, false}}, true},
      {"and", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"or", {{"a", 0.0}, {"b", 0.0}}, y, {}},
      {"not", {{"u", 0.0}}, y, {}},
      {"timer", {{"u", 0.0}}, y, {{"delay", 0.0, true}}},
      {"latch", {{"s", 0.0}, {"r", 0.0}}, y, {{"init", 0.0, false}}},
  };
}

const std::vector<BlockType>& library() {
  static const std::vector<BlockType> lib = make_library();
  return lib;
}

bool truthy(double v) { return v > 0.5; }

double param(const CompiledBlock& b, const char* name) {
  const auto& defs = b.type->params;
  for (std::size_t k = 0; k < defs.size(); ++k) {
    if (defs[k].name == name) return b.params[k];
  }
  throw InvalidBlock(fmt::format("block '{}' has no parameter '{}'", b.id, name));
}

}  // namespace

const BlockType& block_type(const std::string& name) {
  for (const BlockType& t : library()) {
    if (t.name == name) return t;
  }
  throw InvalidBlock(fmt::format("unknown block type '{}'", name));
}

std::vector<std::string> block_type_names() {
  std::vector<std::string> names;
  for (const BlockType& t : library()) names.push_back(t.name);
  return names;
}

void validate_params(const CompiledBlock& b) {
  const std::string& type = b.type->name;
  auto fail = [&](const std::string& why) {
    throw InvalidBlock(fmt::format("block '{}' ({}): {}", b.id, type, why));
  };
  for (std::size_t k = 0; k < b.params.size(); ++k) {
    const bool bound = type == "pid" && (b.type->params[k].name == "min" ||
                                         b.type->params[k].name == "max");
    if (std::isnan(b.params[k]) || (!bound && std::isinf(b.params[k]))) {
      fail(fmt::format("parameter '{}' must be finite", b.type->params[k].name));
    }
  }
  if (type == "filter" && !(param(b, "tau") > 0.0)) fail("tau must be positive");
  if (type == "saturation" && param(b, "min") > param(b, "max")) fail("min exceeds max");
  if (type == "pid" && param(b, "min") > param(b, "max")) fail("min exceeds max");
  if (type == "hysteresis" && !(param(b, "off") < param(b, "on"))) fail("off must be below on");
  if (type == "timer" && param(b, "delay") < 0.0) fail("delay must be nonnegative");
}

std::vector<double> initial_memory(const CompiledBlock& b) {
  const std::string& type = b.type->name;
  if (type == "pid") return {0.0, 0.0};
  if (type == "hysteresis") return {truthy(param(b, "init")) ? 1.0 : 0.0};
  if (type == "filter" || type == "delay") return {param(b, "init")};
  if (type == "timer") return {0.0};
  if (type == "latch") return {truthy(param(b, "init")) ? 1.0 : 0.0};
  return {};
}

void evaluate(const CompiledBlock& b, const double* in, double* out, std::vector<double>& mem,
              char& primed, double dt) {
  const std::string& type = b.type->name;
  const double* p = b.params.data();
  double y = 0.0;
  if (type == "output") {
    y = in[0];
  } else if (type == "const") {
    y = p[0];
  } else if (type == "gain") {
    y = p[0] * in[0];
  } else if (type == "sum") {
    y = p[0] * in[0] + p[1] * in[1] + p[2] * in[2] + p[3] * in[3];
  } else if (type == "mul") {
    y = in[0] * in[1];
  } else if (type == "min") {
    y = std::min(in[0], in[1]);
  } else if (type == "max") {
    y = std::max(in[0], in[1]);
  } else if (type == "saturation") {
    y = std::clamp(in[0], p[0], p[1]);
  } else if (type == "pid") {
    // Positional form with clamping anti-windup: the integral only
    // accumulates when doing so does not push the output further past a limit.
    const double kp = p[0], ki = p[1], kd = p[2], lo = p[3], hi = p[4];
    const double e = in[0] - in[1];
    const double deriv = primed ? kd * (e - mem[1]) / dt : 0.0;
    double integral = mem[0] + e * dt;
    double u = kp * e + ki * integral + deriv;
    if ((u > hi && ki * e > 0.0) || (u < lo && ki * e < 0.0)) {
      integral = mem[0];
      u = kp * e + ki * integral + deriv;
    }
    y = std::clamp(u, lo, hi);
    mem[0] = integral;
    mem[1] = e;
    primed = 1;
  } else if (type == "switch") {
    y = truthy(in[0]) ? in[1] : in[2];
  } else if (type == "gt") {
    y = in[0] > in[1] ? 1.0 : 0.0;
  } else if (type == "ge") {
    y = in[0] >= in[1] ? 1.0 : 0.0;
  } else if (type == "lt") {
    y = in[0] < in[1] ? 1.0 : 0.0;
  } else if (type == "le") {
    y = in[0] <= in[1] ? 1.0 : 0.0;
  } else if (type == "hysteresis") {
    if (mem[0] == 0.0 && in[0] >= p[0]) mem[0] = 1.0;
    else if (mem[0] == 1.0 && in[0] <= p[1]) mem[0] = 0.0;
    y = mem[0];
  } else if (type == "filter") {
    // Implicit Euler on tau*y' = u - y.
    const double r = dt / p[0];
    mem[0] = (mem[0] + r * in[0]) / (1.0 + r);
    y = mem[0];
  } else if (type == "and") {
    y = truthy(in[0]) && truthy(in[1]) ? 1.0 : 0.0;
  } else if (type == "or") {
    y = truthy(in[0]) || truthy(in[1]) ? 1.0 : 0.0;
  } else if (type == "not") {
    y = truthy(in[0]) ? 0.0 : 1.0;
  } else if (type == "timer") {
    // On-delay: true once the input has been true for `delay` seconds,
    // counting the current step.
    mem[0] = truthy(in[0]) ? mem[0] + dt : 0.0;
    y = truthy(in[0]) && mem[0] >= p[0] ? 1.0 : 0.0;
  } else if (type == "latch") {
    if (truthy(in[1])) mem[0] = 0.0;
    else if (truthy(in[0])) mem[0] = 1.0;
    y = mem[0];
  } else {
    throw InvalidBlock(fmt::format("block '{}': type '{}' cannot be evaluated", b.id, type));
  }
  out[0] = y;
}

}  // namespace dhcosim::logic
