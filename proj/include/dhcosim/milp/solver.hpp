#pragma once

#include <string>
#include <vector>

#include "dhcosim/milp/model.hpp"

namespace dhcosim::milp {

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kGapLimit,   // time limit hit with an open gap; incumbent (if any) returned
  kNodeLimit,  // node limit hit; incumbent (if any) returned
};

const char* to_string(SolveStatus status);

struct LpOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-7;
  // Non-improving iterations tolerated before switching to Bland's rule.
  int stall_threshold = 50;
  // Pivots between full rebuilds of the tableau from the original rows.
  int refactor_interval = 400;
};

struct LpSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> values;
  double objective = 0.0;
  long iterations = 0;
  bool used_bland = false;
};

// Solves the LP relaxation (binaries relaxed to their bounds) with a
// bounded-variable simplex method. Infeasibility is a status, not an error.
LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options = {});

struct MilpOptions {
  double gap_tol = 1e-6;        // absolute
  double integrality_tol = 1e-6;
  long node_limit = 1'000'000;
  double time_limit_s = 0.0;    // <= 0 disables the limit
  LpOptions lp;
};

struct MilpSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> values;  // empty when no incumbent exists
  double objective = 0.0;
  double best_bound = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  double wall_time_s = 0.0;

  bool has_incumbent() const { return !values.empty(); }
};

// Branch-and-bound over the binary variables: depth-first dive until the first
// incumbent, best-bound selection afterwards, most-fractional branching with
// ties broken by lowest variable index.
MilpSolution solve_milp(const MilpProblem& problem,
                        const MilpOptions& options = {});

}  // namespace dhcosim::milp
