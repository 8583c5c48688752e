#pragma once

// Dense bounded-variable simplex tableau shared by solve_lp and the
// branch-and-bound driver. Row updates skip zeros in the pivot row and pivot
// column, which keeps pivots cheap on the staircase-structured dispatch
// problems this library targets.

#include <cstdint>
#include <vector>

#include "dhcosim/milp/model.hpp"
#include "dhcosim/milp/solver.hpp"

namespace dhcosim::milp::detail {

enum class ColStatus : std::uint8_t { kBasic, kAtLower, kAtUpper };

struct BasisSnapshot {
  std::vector<int> basic;  // column basic in each row
  std::vector<ColStatus> status;
};

enum class LpOutcome { kOptimal, kInfeasible, kUnbounded };

class Tableau {
 public:
  Tableau(const MilpProblem& problem, const LpOptions& options);

  int num_structural() const { return n_; }
  int num_rows() const { return m_; }

  // Bounds of structural column j.
  void set_bounds(int j, double lb, double ub);
  double lower(int j) const { return lb_[j]; }
  double upper(int j) const { return ub_[j]; }

  LpOutcome solve();

  double objective() const;
  std::vector<double> structural_values() const {
    return {x_.begin(), x_.begin() + n_};
  }
  double value(int j) const { return x_[j]; }

  BasisSnapshot snapshot() const { return {basis_, status_}; }
  void load(const BasisSnapshot& snap);

  long iterations() const { return iterations_; }
  bool used_bland() const { return used_bland_; }

 private:
  double& at(int row, int col) { return T_[static_cast<std::size_t>(row) * N_ + col]; }
  double at(int row, int col) const {
    return T_[static_cast<std::size_t>(row) * N_ + col];
  }

  void reset_to_slack_basis();
  void reinvert(std::vector<int> target_basic);
  void compute_primal();
  void compute_duals();
  void pivot(int r, int q);
  void make_dual_feasible();
  double max_residual() const;

  // Each returns true when it reached its phase goal.
  enum class Phase { kDone, kInfeasible, kUnbounded, kContinue };
  Phase dual_simplex();
  Phase primal_simplex();
  // Counts pivots without objective progress; true past the threshold.
  bool stalled(double obj, double& last_obj, int& stall) const;
  void enter_bland();
  void perturb_costs();
  void restore_costs();
  void maybe_refactor();

  LpOptions opt_;
  int m_ = 0;
  int n_ = 0;
  int N_ = 0;
  bool trivially_infeasible_ = false;

  // Original data, kept for rebuilding the tableau.
  std::vector<std::vector<Term>> rows_;
  std::vector<double> b_;

  std::vector<double> T_;
  std::vector<double> beta_;
  std::vector<double> c_;
  std::vector<double> c_orig_;  // unperturbed costs while perturbed_ is set
  std::vector<double> d_;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<double> x_;
  std::vector<int> basis_;
  std::vector<int> row_of_;
  std::vector<ColStatus> status_;
  std::vector<int> nz_;  // scratch

  long iterations_ = 0;
  long pivots_since_refactor_ = 0;
  bool perturbed_ = false;   // first anti-cycling measure of the dual
  bool bland_ = false;       // second one, and the only one in the primal
  bool used_bland_ = false;  // any solve so far needed it
};

}  // namespace dhcosim::milp::detail
