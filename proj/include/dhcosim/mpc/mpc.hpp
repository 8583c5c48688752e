#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dhcosim/core/errors.hpp"
#include "dhcosim/core/time.hpp"
#include "dhcosim/engine/module.hpp"
#include "dhcosim/milp/model.hpp"
#include "dhcosim/milp/solver.hpp"

namespace dhcosim::mpc {

DHCOSIM_DEFINE_ERROR(ForecastGap);

class InfeasibleProblem : public Error {
 public:
  InfeasibleProblem(Seconds t, std::filesystem::path lp_file);
  const std::filesystem::path& lp_file() const { return lp_file_; }

 private:
  std::filesystem::path lp_file_;
};

struct Horizon {
  Seconds control_period = 3600;
  Seconds length = 3600;
  Seconds step = 3600;

  void validate() const;
  int n_steps() const { return static_cast<int>(length / step); }
  int n_applied() const { return static_cast<int>(control_period / step); }
};

using ForecastSet = std::map<std::string, TimeVector>;
using StateSnapshot = std::map<std::string, double>;
// Forecast values on the horizon grid: index k is time t_now + k * step.
using ForecastWindow = std::map<std::string, std::vector<double>>;

// Samples of `tv` at t_now + k * step, k in [0, n). Every grid point must be
// an actual sample of the vector; anything else is a ForecastGap.
std::vector<double> forecast_window(const std::string& name, const TimeVector& tv, Seconds t_now,
                                    Seconds step, int n);

struct Formulation {
  milp::MilpProblem problem;
  // Per control slot, one expression per horizon step.
  std::map<std::string, std::vector<milp::LinExpr>> controls;
};

// Scenario-level plug-in that builds a fresh problem for each iteration.
class Formulator {
 public:
  virtual ~Formulator() = default;
  virtual std::vector<std::string> state_inputs() const = 0;
  virtual std::vector<std::string> forecasts() const = 0;
  virtual std::vector<std::string> controls() const = 0;
  virtual Formulation formulate(const StateSnapshot& state, const ForecastWindow& forecast,
                                const Horizon& horizon) const = 0;
};

// Control trajectories over the whole horizon, one vector per control slot.
using ControlTrajectory = std::map<std::string, TimeVector>;

struct IterationResult {
  ControlTrajectory trajectory;
  milp::MilpSolution solution;
  int n_vars = 0;
  int n_binaries = 0;
  int n_rows = 0;
  double formulate_s = 0.0;
};

// First `horizon.n_applied()` points of each trajectory.
ControlTrajectory applied_prefix(const ControlTrajectory& traj, const Horizon& horizon);

// One rolling-horizon iteration at time t_now. When the solver reports
// infeasibility the problem is written to `dump_dir` and InfeasibleProblem is
// thrown.
IterationResult mpc_iterate(const StateSnapshot& state, const ForecastSet& forecasts,
                            Seconds t_now, const Horizon& horizon, const Formulator& formulator,
                            const milp::MilpOptions& options,
                            const std::filesystem::path& dump_dir = ".");

// Shifts every vector by dt, overlays `fresh` samples on top, and checks that
// each series again covers the horizon from its new origin.
ForecastSet receding_update(const ForecastSet& previous, const ForecastSet& fresh, Seconds dt,
                            const Horizon& horizon);

struct DiagnosticRecord {
  Seconds time;
  milp::SolveStatus status;
  double objective;
  double best_bound;
  long nodes;
  long lp_iterations;
  double wall_time_s;
  double formulate_s;
};

struct Diagnostics {
  std::vector<DiagnosticRecord> records;
  int n_vars = 0;
  int n_binaries = 0;
  int n_rows = 0;
};

void write_diagnostics_csv(const std::filesystem::path& path, const Diagnostics& diag);

struct MpcModuleConfig {
  Horizon horizon;
  milp::MilpOptions solver;
  // Complete data feed per forecast name. The module keeps a rolling window
  // of it and refreshes the window with receding_update each iteration.
  ForecastSet feed;
  std::filesystem::path dump_dir = ".";
  std::shared_ptr<Diagnostics> diagnostics;  // optional sink
};

// Runs the formulator on its own (slow) sequence. Inputs are the formulator's
// state slots, outputs are its control slots as time-vectors holding the
// applied prefix.
class MpcModule final : public engine::SimModule {
 public:
  MpcModule(std::string id, std::shared_ptr<const Formulator> formulator, MpcModuleConfig config);

 protected:
  void on_initialize(Seconds t0) override;
  void on_step(Seconds t, Seconds dt) override;

 private:
  ForecastSet feed_window(Seconds from, Seconds to) const;

  std::shared_ptr<const Formulator> formulator_;
  MpcModuleConfig cfg_;
  ForecastSet window_;
  bool first_ = true;
  Seconds last_t_ = 0;
};

}  // namespace dhcosim::mpc
