#include "dhcosim/plants/scenario_b.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "storage.hpp"

namespace dhcosim::plants {

using milp::LinExpr;
using milp::VarId;

namespace {

constexpr double kThroughputCost = 1e-3;

int steps_in(double hours, Seconds step) {
  return static_cast<int>(std::lround(hours * 3600.0 / static_cast<double>(step)));
}

}  // namespace

void PlantParamsB::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("{} must be positive", name));
  };
  positive(biomass_max_mw, "biomass_max_mw");
  positive(biomass_price, "biomass_price");
  positive(hp_max_mw, "hp_max_mw");
  if (!(cop > 1.0) || !std::isfinite(cop)) throw InvalidArgument("cop must exceed 1");
  if (!(biomass_min_fraction > 0.0 && biomass_min_fraction < 1.0)) {
    throw InvalidArgument("biomass_min_fraction must lie in (0, 1)");
  }
  if (!(hp_min_fraction >= 0.0 && hp_min_fraction < 1.0)) {
    throw InvalidArgument("hp_min_fraction must lie in [0, 1)");
  }
  if (!(storage_capacity_mwh >= 0.0) || !(storage_power_mw >= 0.0) || !(stop_spacing_h >= 0.0)) {
    throw InvalidArgument("storage sizes and stop spacing must be >= 0");
  }
  if (initial_storage_mwh < 0.0 || initial_storage_mwh > storage_capacity_mwh) {
    throw InvalidArgument("initial_storage_mwh must lie within the storage capacity");
  }
}

FormulatorB::FormulatorB(PlantParamsB params) : p_(params) { p_.validate(); }

std::vector<std::string> FormulatorB::state_inputs() const { return {"E", "u", "since_stop"}; }
std::vector<std::string> FormulatorB::forecasts() const { return {"load", "price_el"}; }
std::vector<std::string> FormulatorB::controls() const {
  return {"u", "Pb", "h", "Php", "Pch", "Pdis"};
}

mpc::Formulation FormulatorB::formulate(const mpc::StateSnapshot& state,
                                        const mpc::ForecastWindow& forecast,
                                        const mpc::Horizon& horizon) const {
  const int H = horizon.n_steps();
  const double dt = static_cast<double>(horizon.step) / 3600.0;
  const std::vector<double>& load = forecast.at("load");
  const std::vector<double>& price = forecast.at("price_el");
  const int W = steps_in(p_.stop_spacing_h, horizon.step);
  const double cap = p_.storage_capacity_mwh;
  const double pw = cap > 0.0 ? p_.storage_power_mw : 0.0;
  const double E0 = std::clamp(state.at("E"), 0.0, cap);
  const double u_prev = state.at("u") > 0.5 ? 1.0 : 0.0;

  mpc::Formulation f;
  milp::MilpProblem& P = f.problem;
  P.reserve(9 * H + 1, 11 * H);
  std::vector<VarId> Pb(H), Php(H), Pch(H), Pdis(H), u(H), s(H), m(H), hp(H), E(H + 1);
  E[0] = P.add_continuous("E_0", E0, E0);
  for (int t = 0; t < H; ++t) {
    Pb[t] = P.add_continuous(fmt::format("Pb_{}", t), 0.0, p_.biomass_max_mw);
    Php[t] = P.add_continuous(fmt::format("Php_{}", t), 0.0, p_.hp_max_mw);
    Pch[t] = P.add_continuous(fmt::format("Pch_{}", t), 0.0, pw);
    Pdis[t] = P.add_continuous(fmt::format("Pdis_{}", t), 0.0, pw);
    E[t + 1] = P.add_continuous(fmt::format("E_{}", t + 1), 0.0, cap);
    u[t] = P.add_binary(fmt::format("u_{}", t));
    // Continuous on purpose: once u is integral the smallest feasible s is
    // 0/1 already, so branching on it only multiplies nodes.
    s[t] = P.add_continuous(fmt::format("s_{}", t), 0.0, 1.0);
    m[t] = P.add_binary(fmt::format("m_{}", t));
    hp[t] = P.add_binary(fmt::format("h_{}", t));
  }

  for (int t = 0; t < H; ++t) {
    P.add_constraint(Pb[t] + Php[t] + Pdis[t] - Pch[t] == load[t], fmt::format("balance_{}", t));
    P.add_constraint(Pb[t] - p_.biomass_max_mw * u[t] <= 0.0, fmt::format("bmax_{}", t));
    P.add_constraint(Pb[t] - p_.biomass_min_mw() * u[t] >= 0.0, fmt::format("bmin_{}", t));
    P.add_constraint(Php[t] - p_.hp_max_mw * hp[t] <= 0.0, fmt::format("hpmax_{}", t));
    P.add_constraint(Php[t] - p_.hp_min_mw() * hp[t] >= 0.0, fmt::format("hpmin_{}", t));
    // Neither unit can exceed load plus charging power; as bounds on the
    // binaries these rows tighten the relaxation only.
    const double reach = std::max(load[t], 0.0) + pw;
    if (reach < p_.biomass_max_mw) {
      P.add_constraint(Pb[t] - reach * u[t] <= 0.0, fmt::format("breach_{}", t));
    }
    if (reach < p_.hp_max_mw) {
      P.add_constraint(Php[t] - reach * hp[t] <= 0.0, fmt::format("hpreach_{}", t));
    }
    P.add_constraint(E[t + 1] - E[t] - dt * Pch[t] + dt * Pdis[t] == 0.0,
                     fmt::format("energy_{}", t));
    P.add_constraint(Pch[t] - pw * m[t] <= 0.0, fmt::format("chmode_{}", t));
    P.add_constraint(Pdis[t] + pw * m[t] <= pw, fmt::format("dismode_{}", t));
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
    const double since = state.at("since_stop");
    const int h = since >= 1e5 ? (1 << 28) : steps_in(since, horizon.step);
    if (h < W) {
      LinExpr lead;
      for (int tau = 0; tau <= std::min(W - 1 - h, H - 1); ++tau) lead.add(s[tau], 1.0);
      P.add_constraint(std::move(lead) <= 0.0, "spacing_state");
    }
  }

  LinExpr obj;
  obj.reserve(4 * H + 1);
  for (int t = 0; t < H; ++t) {
    obj.add(Pb[t], dt * p_.biomass_price);
    obj.add(Php[t], dt * price[t] / p_.cop);
    obj.add(Pch[t], dt * kThroughputCost);
    obj.add(Pdis[t], dt * kThroughputCost);
  }
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
  f.controls["h"] = series(hp);
  f.controls["Php"] = series(Php);
  f.controls["Pch"] = series(Pch);
  f.controls["Pdis"] = series(Pdis);
  return f;
}

StepResultB simulate_step_b(const PlantStateA& state, const ControlsA& cmd, double load,
                            double price, double dt_h, const PlantParamsB& p) {
  StepResultB r;
  r.load = load;
  r.price = price;
  const bool on = cmd.u > 0.5;
  r.Pb = on ? std::clamp(cmd.Pb, p.biomass_min_mw(), p.biomass_max_mw) : 0.0;

  const detail::StorageMove sm = detail::move_storage(
      state.E, cmd.Pch, cmd.Pdis, dt_h, p.storage_capacity_mwh, p.storage_power_mw, r.violations);
  r.state.E = sm.E;
  r.Pch = sm.Pch;
  r.Pdis = sm.Pdis;
  r.storage_clipped_mwh = sm.clipped_mwh;

  const double residual = load - r.Pb - r.Pdis + r.Pch;
  r.Php = std::clamp(residual, 0.0, p.hp_max_mw);
  r.imbalance = r.Pb + r.Php + r.Pdis - r.Pch - load;
  if (r.imbalance > 1e-9) {
    r.violations.push_back(fmt::format("surplus heat {:.6g} MW", r.imbalance));
  } else if (r.imbalance < -1e-9) {
    r.violations.push_back(fmt::format("unmet load {:.6g} MW", -r.imbalance));
  }

  r.state.u = on;
  r.stop = state.u && !on;
  const bool start = !state.u && on;
  r.state.since_stop_h = r.stop ? dt_h : state.since_stop_h + dt_h;
  r.state.since_start_h = start ? dt_h : state.since_start_h + dt_h;
  if (r.stop && state.since_stop_h < p.stop_spacing_h - 1e-9) {
    r.spacing_violated = true;
    r.violations.push_back("stop spacing");
  }
  r.cost = dt_h * (p.biomass_price * r.Pb + price / p.cop * r.Php);
  return r;
}

namespace {

std::vector<engine::PortSpec> plant_b_outputs() {
  std::vector<engine::PortSpec> out;
  for (const char* n : {"E", "u", "since_stop", "Pb", "Php", "Pch", "Pdis", "load", "price_el",
                        "imbalance", "storage_clipped", "violations", "stop", "spacing_violation",
                        "cost"}) {
    out.push_back({n, SlotKind::kScalar, 0.0});
  }
  return out;
}

}  // namespace

PlantB::PlantB(std::string id, PlantParamsB params, TimeVector load, TimeVector price,
               ControlKind kind, std::shared_ptr<ViolationLog> log)
    : SimModule(std::move(id), control_ports({"u", "Pb", "Pch", "Pdis"}, kind), plant_b_outputs()),
      p_(params),
      load_(std::move(load)),
      price_(std::move(price)),
      kind_(kind),
      log_(std::move(log)) {
  p_.validate();
}

double PlantB::command(const std::string& port, Seconds t) const {
  if (kind_ == ControlKind::kScalar) return input(port);
  if (!input_available(port)) return 0.0;
  return tv_sample(input_value(port).vector(), t, Interp::kHoldLast);
}

void PlantB::publish_state() {
  output("E", state_.E);
  output("u", state_.u ? 1.0 : 0.0);
  output("since_stop", state_.since_stop_h);
}

void PlantB::on_initialize(Seconds /*t0*/) {
  state_ = PlantStateA{};
  state_.E = p_.initial_storage_mwh;
  if (log_) log_->clear();
  publish_state();
}

void PlantB::on_step(Seconds t, Seconds dt) {
  const ControlsA cmd{command("u", t), command("Pb", t), command("Pch", t), command("Pdis", t)};
  const double load = tv_sample(load_, t, Interp::kHoldLast);
  const double price = tv_sample(price_, t, Interp::kHoldLast);
  const StepResultB r =
      simulate_step_b(state_, cmd, load, price, static_cast<double>(dt) / 3600.0, p_);
  state_ = r.state;
  publish_state();
  output("Pb", r.Pb);
  output("Php", r.Php);
  output("Pch", r.Pch);
  output("Pdis", r.Pdis);
  output("load", r.load);
  output("price_el", r.price);
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
