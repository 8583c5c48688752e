#include "dhcosim/plants/scenario_a.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "storage.hpp"

namespace dhcosim::plants {

using milp::LinExpr;
using milp::VarId;

StopRule parse_stop_rule(const std::string& name) {
  if (name == "stop-spacing") return StopRule::kStopSpacing;
  if (name == "min-up-time") return StopRule::kMinUpTime;
  throw InvalidArgument(fmt::format("unknown stop rule '{}' (stop-spacing | min-up-time)", name));
}

const char* to_string(StopRule rule) {
  return rule == StopRule::kStopSpacing ? "stop-spacing" : "min-up-time";
}

void PlantParamsA::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("{} must be positive", name));
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("{} must be >= 0", name));
  };
  positive(annual_load_mwh, "annual_load_mwh");
  positive(gas_max_mw, "gas_max_mw");
  positive(biomass_max_mw, "biomass_max_mw");
  nonneg(storage_capacity_mwh, "storage_capacity_mwh");
  nonneg(storage_power_mw, "storage_power_mw");
  nonneg(stop_spacing_h, "stop_spacing_h");
  positive(gas_price, "gas_price");
  positive(biomass_price, "biomass_price");
  if (!(biomass_min_fraction > 0.0 && biomass_min_fraction < 1.0)) {
    throw InvalidArgument("biomass_min_fraction must lie in (0, 1)");
  }
  if (!(renewable_target >= 0.0 && renewable_target <= 1.0)) {
    throw InvalidArgument("renewable_target must lie in [0, 1]");
  }
  if (initial_storage_mwh < 0.0 || initial_storage_mwh > storage_capacity_mwh) {
    throw InvalidArgument("initial_storage_mwh must lie within the storage capacity");
  }
  if (window_min_share > 1.0) throw InvalidArgument("window_min_share must be <= 1");
}

FormulatorA::FormulatorA(PlantParamsA params) : p_(params) { p_.validate(); }

std::vector<std::string> FormulatorA::state_inputs() const {
  return {"E", "u", "since_stop", "since_start"};
}
std::vector<std::string> FormulatorA::forecasts() const { return {"load"}; }
std::vector<std::string> FormulatorA::controls() const { return {"u", "Pb", "Pg", "Pch", "Pdis"}; }

namespace {

constexpr double kThroughputCost = 1e-3;  // EUR per MWh moved through the tank

// Number of whole steps covered by `hours`.
int steps_in(double hours, Seconds step) {
  return static_cast<int>(std::lround(hours * 3600.0 / static_cast<double>(step)));
}

// Steps elapsed since an event `hours` ago, rounded to the grid.
int steps_since(double hours, Seconds step) {
  if (hours >= 1e5) return 1 << 28;
  return static_cast<int>(std::lround(hours * 3600.0 / static_cast<double>(step)));
}

}  // namespace

mpc::Formulation FormulatorA::formulate(const mpc::StateSnapshot& state,
                                        const mpc::ForecastWindow& forecast,
                                        const mpc::Horizon& horizon) const {
  const int H = horizon.n_steps();
  const double dt = static_cast<double>(horizon.step) / 3600.0;
  const std::vector<double>& load = forecast.at("load");
  const int W = steps_in(p_.stop_spacing_h, horizon.step);
  const double cap = p_.storage_capacity_mwh;
  const double pw = cap > 0.0 ? p_.storage_power_mw : 0.0;
  const double E0 = std::clamp(state.at("E"), 0.0, cap);
  const double u_prev = state.at("u") > 0.5 ? 1.0 : 0.0;

  mpc::Formulation f;
  milp::MilpProblem& P = f.problem;
  P.reserve(8 * H + 1, 10 * H);
  std::vector<VarId> Pg(H), Pb(H), u(H), s(H), Pch(H), Pdis(H), m(H), E(H + 1);
  E[0] = P.add_continuous("E_0", E0, E0);
  for (int t = 0; t < H; ++t) {
    Pg[t] = P.add_continuous(fmt::format("Pg_{}", t), 0.0, p_.gas_max_mw);
    Pb[t] = P.add_continuous(fmt::format("Pb_{}", t), 0.0, p_.biomass_max_mw);
    u[t] = P.add_binary(fmt::format("u_{}", t));
    s[t] = P.add_binary(fmt::format("{}_{}", p_.stop_rule == StopRule::kStopSpacing ? "s" : "st", t));
    Pch[t] = P.add_continuous(fmt::format("Pch_{}", t), 0.0, pw);
    Pdis[t] = P.add_continuous(fmt::format("Pdis_{}", t), 0.0, pw);
    m[t] = P.add_binary(fmt::format("m_{}", t));
    E[t + 1] = P.add_continuous(fmt::format("E_{}", t + 1), 0.0, cap);
  }

  for (int t = 0; t < H; ++t) {
    P.add_constraint(Pg[t] + Pb[t] + Pdis[t] - Pch[t] == load[t], fmt::format("balance_{}", t));
    P.add_constraint(Pb[t] - p_.biomass_max_mw * u[t] <= 0.0, fmt::format("bmax_{}", t));
    P.add_constraint(Pb[t] - p_.biomass_min_mw() * u[t] >= 0.0, fmt::format("bmin_{}", t));
    // Biomass can never exceed load plus charging power. As a bound on u this
    // tightens the relaxation without cutting off any integer plan.
    const double reach = std::min(p_.biomass_max_mw, std::max(load[t], 0.0) + pw);
    if (reach < p_.biomass_max_mw) {
      P.add_constraint(Pb[t] - reach * u[t] <= 0.0, fmt::format("breach_{}", t));
    }
    P.add_constraint(E[t + 1] - E[t] - dt * Pch[t] + dt * Pdis[t] == 0.0,
                     fmt::format("energy_{}", t));
    P.add_constraint(Pch[t] - pw * m[t] <= 0.0, fmt::format("chmode_{}", t));
    P.add_constraint(Pdis[t] + pw * m[t] <= pw, fmt::format("dismode_{}", t));
  }

  if (p_.stop_rule == StopRule::kStopSpacing) {
    // s(t) >= u(t-1) - u(t)
    for (int t = 0; t < H; ++t) {
      if (t == 0) {
        P.add_constraint(s[0] + u[0] >= u_prev, "stop_0");
      } else {
        P.add_constraint(s[t] - u[t - 1] + u[t] >= 0.0, fmt::format("stop_{}", t));
      }
    }
    if (W >= 2) {
      for (int t0 = 0; t0 <= std::max(0, H - W); ++t0) {
        LinExpr win;
        for (int tau = t0; tau <= std::min(t0 + W - 1, H - 1); ++tau) win.add(s[tau], 1.0);
        P.add_constraint(std::move(win) <= 1.0, fmt::format("spacing_{}", t0));
      }
      // A stop h steps ago forbids another one in the first W - h steps.
      const int h = steps_since(state.at("since_stop"), horizon.step);
      if (h < W) {
        LinExpr lead;
        for (int tau = 0; tau <= std::min(W - 1 - h, H - 1); ++tau) lead.add(s[tau], 1.0);
        P.add_constraint(std::move(lead) <= 0.0, "spacing_state");
      }
    }
  } else {
    // st(t) >= u(t) - u(t-1); a start keeps u on for W steps.
    for (int t = 0; t < H; ++t) {
      if (t == 0) {
        P.add_constraint(s[0] - u[0] >= -u_prev, "start_0");
      } else {
        P.add_constraint(s[t] - u[t] + u[t - 1] >= 0.0, fmt::format("start_{}", t));
      }
    }
    for (int t = 0; t < H && W >= 2; ++t) {
      LinExpr up;
      for (int tau = std::max(0, t - W + 1); tau <= t; ++tau) up.add(s[tau], 1.0);
      up.add(u[t], -1.0);
      P.add_constraint(std::move(up) <= 0.0, fmt::format("minup_{}", t));
    }
    const int h = steps_since(state.at("since_start"), horizon.step);
    if (u_prev > 0.5 && h < W) {
      for (int tau = 0; tau <= std::min(W - 1 - h, H - 1); ++tau) {
        P.add_constraint(LinExpr(u[tau]) >= 1.0, fmt::format("minup_state_{}", tau));
      }
    }
  }

  if (p_.window_min_share >= 0.0) {
    LinExpr bio;
    double total = 0.0;
    for (int t = 0; t < H; ++t) {
      bio.add(Pb[t], 1.0);
      total += load[t];
    }
    P.add_constraint(std::move(bio) >= p_.window_min_share * total, "min_share");
  }

  LinExpr obj;
  obj.reserve(2 * H + 1);
  for (int t = 0; t < H; ++t) {
    obj.add(Pg[t], dt * p_.gas_price);
    obj.add(Pb[t], dt * p_.biomass_price);
    // Tiny throughput charge: with a lossless tank, charging and discharging
    // at once would otherwise cost nothing and leave the mode binary free.
    obj.add(Pch[t], dt * kThroughputCost);
    obj.add(Pdis[t], dt * kThroughputCost);
  }
  // Stored heat left at the end is worth what biomass would charge for it.
  obj.add(E[H], -p_.biomass_price);
  P.set_objective(std::move(obj));

  auto series = [&](const std::vector<VarId>& v) {
    std::vector<LinExpr> out;
    out.reserve(v.size());
    for (VarId x : v) out.emplace_back(x);
    return out;
  };
  f.controls["u"] = series(u);
  f.controls["Pb"] = series(Pb);
  f.controls["Pg"] = series(Pg);
  f.controls["Pch"] = series(Pch);
  f.controls["Pdis"] = series(Pdis);
  return f;
}

namespace detail {

StorageMove move_storage(double E, double ch_cmd, double dis_cmd, double dt_h, double capacity,
                         double power, std::vector<std::string>& violations) {
  const double ch = std::clamp(ch_cmd, 0.0, power);
  const double dis = std::clamp(dis_cmd, 0.0, power);
  // Solver output can overshoot a bound by rounding noise; only real excess counts.
  if (ch_cmd > power + 1e-9 || dis_cmd > power + 1e-9) {
    violations.push_back("storage power limit");
  }
  const double net_req = ch - dis;
  const double net = std::clamp(net_req, -E / dt_h, (capacity - E) / dt_h);
  StorageMove m;
  m.Pch = std::max(net, 0.0);
  m.Pdis = std::max(-net, 0.0);
  m.E = net == net_req ? E + dt_h * net : std::clamp(E + dt_h * net, 0.0, capacity);
  m.clipped_mwh = std::abs(net_req - net) * dt_h;
  if (m.clipped_mwh > 1e-9) {
    violations.push_back(fmt::format("storage {} {:.6g} MWh", net_req > net ? "overflow" : "underflow",
                                     m.clipped_mwh));
  }
  return m;
}

}  // namespace detail

StepResultA simulate_step_a(const PlantStateA& state, const ControlsA& cmd, double load,
                            double dt_h, const PlantParamsA& p) {
  StepResultA r;
  r.load = load;
  const bool on = cmd.u > 0.5;
  r.Pb = on ? std::clamp(cmd.Pb, p.biomass_min_mw(), p.biomass_max_mw) : 0.0;

  const detail::StorageMove sm = detail::move_storage(
      state.E, cmd.Pch, cmd.Pdis, dt_h, p.storage_capacity_mwh, p.storage_power_mw, r.violations);
  r.state.E = sm.E;
  r.Pch = sm.Pch;
  r.Pdis = sm.Pdis;
  r.storage_clipped_mwh = sm.clipped_mwh;

  const double residual = load - r.Pb - r.Pdis + r.Pch;
  r.Pg = std::clamp(residual, 0.0, p.gas_max_mw);
  r.imbalance = r.Pg + r.Pb + r.Pdis - r.Pch - load;
  if (r.imbalance > 1e-9) {
    r.violations.push_back(fmt::format("surplus heat {:.6g} MW", r.imbalance));
  } else if (r.imbalance < -1e-9) {
    r.violations.push_back(fmt::format("unmet load {:.6g} MW", -r.imbalance));
  }

  r.state.u = on;
  r.stop = state.u && !on;
  r.start = !state.u && on;
  r.state.since_stop_h = r.stop ? dt_h : state.since_stop_h + dt_h;
  r.state.since_start_h = r.start ? dt_h : state.since_start_h + dt_h;
  if (r.stop && state.since_stop_h < p.stop_spacing_h - 1e-9 &&
      p.stop_rule == StopRule::kStopSpacing) {
    r.spacing_violated = true;
    r.violations.push_back("stop spacing");
  }
  if (r.stop && state.since_start_h < p.stop_spacing_h - 1e-9 &&
      p.stop_rule == StopRule::kMinUpTime) {
    r.spacing_violated = true;
    r.violations.push_back("minimum up time");
  }
  r.cost = dt_h * (p.gas_price * r.Pg + p.biomass_price * r.Pb);
  return r;
}

std::vector<engine::PortSpec> control_ports(const std::vector<std::string>& names,
                                            ControlKind kind) {
  std::vector<engine::PortSpec> out;
  for (const auto& n : names) {
    out.push_back({n, kind == ControlKind::kScalar ? SlotKind::kScalar : SlotKind::kTimeVector, 0.0});
  }
  return out;
}

namespace {

std::vector<engine::PortSpec> plant_a_outputs() {
  std::vector<engine::PortSpec> out;
  for (const char* n : {"E", "u", "since_stop", "since_start", "Pb", "Pg", "Pch", "Pdis", "load",
                        "imbalance", "storage_clipped", "violations", "stop", "spacing_violation",
                        "cost"}) {
    out.push_back({n, SlotKind::kScalar, 0.0});
  }
  return out;
}

}  // namespace

PlantA::PlantA(std::string id, PlantParamsA params, TimeVector load, ControlKind kind,
               std::shared_ptr<ViolationLog> log)
    : SimModule(std::move(id), control_ports({"u", "Pb", "Pch", "Pdis"}, kind), plant_a_outputs()),
      p_(params),
      load_(std::move(load)),
      kind_(kind),
      log_(std::move(log)) {
  p_.validate();
}

double PlantA::command(const std::string& port, Seconds t) const {
  if (kind_ == ControlKind::kScalar) return input(port);
  if (!input_available(port)) return 0.0;
  return tv_sample(input_value(port).vector(), t, Interp::kHoldLast);
}

void PlantA::publish_state() {
  output("E", state_.E);
  output("u", state_.u ? 1.0 : 0.0);
  output("since_stop", state_.since_stop_h);
  output("since_start", state_.since_start_h);
}

void PlantA::on_initialize(Seconds /*t0*/) {
  state_ = PlantStateA{};
  state_.E = p_.initial_storage_mwh;
  if (log_) log_->clear();
  publish_state();
}

void PlantA::on_step(Seconds t, Seconds dt) {
  const ControlsA cmd{command("u", t), command("Pb", t), command("Pch", t), command("Pdis", t)};
  const double load = tv_sample(load_, t, Interp::kHoldLast);
  const StepResultA r = simulate_step_a(state_, cmd, load, static_cast<double>(dt) / 3600.0, p_);
  state_ = r.state;
  publish_state();
  output("Pb", r.Pb);
  output("Pg", r.Pg);
  output("Pch", r.Pch);
  output("Pdis", r.Pdis);
  output("load", r.load);
  output("imbalance", r.imbalance);
  output("storage_clipped", r.storage_clipped_mwh);
  output("violations", static_cast<double>(r.violations.size()));
  output("stop", r.stop ? 1.0 : 0.0);
  output("spacing_violation", r.spacing_violated ? 1.0 : 0.0);
  output("cost", r.cost);
  if (log_) {
    for (const auto& v : r.violations) log_->push_back({t, id(), v});
  }
}

}  // namespace dhcosim::plants
