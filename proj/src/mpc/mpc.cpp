#include "dhcosim/mpc/mpc.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <chrono>
#include <optional>

#include "dhcosim/milp/lp_format.hpp"

namespace dhcosim::mpc {

InfeasibleProblem::InfeasibleProblem(Seconds t, std::filesystem::path lp_file)
    : Error("InfeasibleProblem",
            fmt::format("MPC problem at t={} is infeasible; model written to '{}'", t,
                        lp_file.string())),
      lp_file_(std::move(lp_file)) {}

void Horizon::validate() const {
  if (step <= 0) throw InvalidArgument("horizon step must be positive");
  if (length <= 0 || length % step != 0) {
    throw InvalidArgument(fmt::format("horizon {} s is not a positive multiple of the step {} s",
                                      length, step));
  }
  if (control_period <= 0 || control_period % step != 0) {
    throw InvalidArgument(fmt::format(
        "control period {} s is not a positive multiple of the step {} s", control_period, step));
  }
  if (control_period > length) {
    throw InvalidArgument(fmt::format("control period {} s exceeds the horizon {} s",
                                      control_period, length));
  }
}

std::vector<double> forecast_window(const std::string& name, const TimeVector& tv, Seconds t_now,
                                    Seconds step, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const Seconds t = t_now + k * step;
    const std::size_t i = tv.find(t);
    if (i == TimeVector::npos) {
      throw ForecastGap(fmt::format("forecast '{}' has no sample at t={} (horizon [{}, {}))",
                                    name, t, t_now, t_now + n * step));
    }
    out[k] = tv.values()[i];
  }
  return out;
}

ControlTrajectory applied_prefix(const ControlTrajectory& traj, const Horizon& horizon) {
  ControlTrajectory out;
  for (const auto& [name, tv] : traj) {
    const std::size_t n = std::min<std::size_t>(horizon.n_applied(), tv.size());
    std::vector<Seconds> t(tv.times().begin(), tv.times().begin() + n);
    std::vector<double> v(tv.values().begin(), tv.values().begin() + n);
    out.emplace(name, TimeVector(std::move(t), std::move(v), tv.unit()));
  }
  return out;
}

IterationResult mpc_iterate(const StateSnapshot& state, const ForecastSet& forecasts,
                            Seconds t_now, const Horizon& horizon, const Formulator& formulator,
                            const milp::MilpOptions& options,
                            const std::filesystem::path& dump_dir) {
  horizon.validate();
  const int n = horizon.n_steps();
  ForecastWindow window;
  for (const std::string& name : formulator.forecasts()) {
    auto it = forecasts.find(name);
    if (it == forecasts.end()) throw ForecastGap(fmt::format("forecast '{}' is missing", name));
    window[name] = forecast_window(name, it->second, t_now, horizon.step, n);
  }
  for (const std::string& name : formulator.state_inputs()) {
    if (!state.count(name)) throw InvalidArgument(fmt::format("state '{}' is missing", name));
  }

  IterationResult res;
  const auto t0 = std::chrono::steady_clock::now();
  Formulation f = formulator.formulate(state, window, horizon);
  res.formulate_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.n_vars = f.problem.num_vars();
  res.n_binaries = f.problem.num_binaries();
  res.n_rows = f.problem.num_rows();

  res.solution = milp::solve_milp(f.problem, options);
  if (!res.solution.has_incumbent()) {
    std::filesystem::create_directories(dump_dir);
    const auto path = dump_dir / fmt::format("infeasible_t{}.lp", t_now);
    milp::export_lp(f.problem, path);
    throw InfeasibleProblem(t_now, path);
  }

  std::vector<Seconds> times(n);
  for (int k = 0; k < n; ++k) times[k] = t_now + k * horizon.step;
  for (const auto& [name, exprs] : f.controls) {
    if (static_cast<int>(exprs.size()) != n) {
      throw InvalidArgument(fmt::format("control '{}' has {} steps, expected {}", name,
                                        exprs.size(), n));
    }
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) {
      double acc = exprs[k].constant();
      for (const milp::Term& term : exprs[k].terms()) acc += term.coef * res.solution.values[term.var];
      v[k] = acc;
    }
    res.trajectory.emplace(name, TimeVector(times, std::move(v)));
  }
  return res;
}

ForecastSet receding_update(const ForecastSet& previous, const ForecastSet& fresh, Seconds dt,
                            const Horizon& horizon) {
  if (dt <= 0) throw InvalidArgument("receding update needs dt > 0");
  horizon.validate();
  ForecastSet out;
  auto keep = [&](const std::string& name, const TimeVector& merged, Seconds origin) {
    const TimeVector tail = tv_slice(merged, origin, merged.back_time() + 1);
    forecast_window(name, tail, origin, horizon.step, horizon.n_steps());
    out.insert_or_assign(name, tail);
  };
  for (const auto& [name, tv] : previous) {
    const Seconds origin = tv.front_time() + dt;
    auto it = fresh.find(name);
    std::optional<TimeVector> shifted;
    try {
      shifted = tv_shift(tv, dt);
    } catch (const AllPointsExpired&) {
    }
    if (it == fresh.end()) {
      if (!shifted) {
        throw ForecastGap(fmt::format("forecast '{}' expired and no new samples arrived", name));
      }
      keep(name, *shifted, origin);
    } else {
      const TimeVector merged = shifted ? tv_overlay(*shifted, it->second) : it->second;
      if (merged.back_time() < origin) {
        throw ForecastGap(fmt::format("forecast '{}' has no samples after t={}", name, origin));
      }
      keep(name, merged, origin);
    }
  }
  for (const auto& [name, tv] : fresh) {
    if (!previous.count(name)) keep(name, tv, tv.front_time());
  }
  return out;
}

void write_diagnostics_csv(const std::filesystem::path& path, const Diagnostics& diag) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = fmt::output_file(path.string());
  out.print("time,status,objective,best_bound,nodes,lp_iterations,wall_time_s,formulate_s\n");
  for (const DiagnosticRecord& r : diag.records) {
    out.print("{},{},{},{},{},{},{},{}\n", r.time, milp::to_string(r.status), r.objective,
              r.best_bound, r.nodes, r.lp_iterations, r.wall_time_s, r.formulate_s);
  }
}

namespace {

std::vector<engine::PortSpec> scalar_ports(const std::vector<std::string>& names) {
  std::vector<engine::PortSpec> out;
  for (const auto& n : names) out.push_back({n, SlotKind::kScalar, 0.0});
  return out;
}

std::vector<engine::PortSpec> vector_ports(const std::vector<std::string>& names) {
  std::vector<engine::PortSpec> out;
  for (const auto& n : names) out.push_back({n, SlotKind::kTimeVector, 0.0});
  return out;
}

}  // namespace

MpcModule::MpcModule(std::string id, std::shared_ptr<const Formulator> formulator,
                     MpcModuleConfig config)
    : SimModule(std::move(id), scalar_ports(formulator->state_inputs()),
                vector_ports(formulator->controls())),
      formulator_(std::move(formulator)),
      cfg_(std::move(config)) {
  cfg_.horizon.validate();
  for (const std::string& name : formulator_->forecasts()) {
    if (!cfg_.feed.count(name)) {
      throw InvalidArgument(fmt::format("MPC '{}' has no data feed for forecast '{}'", this->id(), name));
    }
  }
}

ForecastSet MpcModule::feed_window(Seconds from, Seconds to) const {
  ForecastSet out;
  for (const std::string& name : formulator_->forecasts()) {
    const TimeVector& tv = cfg_.feed.at(name);
    if (tv.back_time() < from || tv.front_time() >= to) {
      throw ForecastGap(fmt::format("data feed '{}' has nothing in [{}, {})", name, from, to));
    }
    out.insert_or_assign(name, tv_slice(tv, std::max(from, tv.front_time()), to));
  }
  return out;
}

void MpcModule::on_initialize(Seconds /*t0*/) {
  first_ = true;
  window_.clear();
  if (cfg_.diagnostics) cfg_.diagnostics->records.clear();
}

void MpcModule::on_step(Seconds t, Seconds dt) {
  const Horizon& h = cfg_.horizon;
  if (dt != h.control_period) {
    throw InvalidArgument(fmt::format(
        "MPC '{}' fires every {} s but its control period is {} s", id(), dt, h.control_period));
  }
  if (first_) {
    window_ = feed_window(t, t + h.length);
    first_ = false;
  } else {
    const Seconds shift = t - last_t_;
    window_ = receding_update(window_, feed_window(t + h.length - shift, t + h.length), shift, h);
  }
  last_t_ = t;

  StateSnapshot state;
  for (const std::string& name : formulator_->state_inputs()) state[name] = input(name);
  IterationResult res = mpc_iterate(state, window_, t, h, *formulator_, cfg_.solver, cfg_.dump_dir);

  for (auto& [name, tv] : applied_prefix(res.trajectory, h)) output(name, std::move(tv));

  if (cfg_.diagnostics) {
    const auto& s = res.solution;
    cfg_.diagnostics->records.push_back({t, s.status, s.objective, s.best_bound, s.nodes,
                                         s.lp_iterations, s.wall_time_s, res.formulate_s});
    cfg_.diagnostics->n_vars = res.n_vars;
    cfg_.diagnostics->n_binaries = res.n_binaries;
    cfg_.diagnostics->n_rows = res.n_rows;
  }
}

}  // namespace dhcosim::mpc
