#include "tableau.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dhcosim::milp::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kZeroTol = 1e-13;

}  // namespace

Tableau::Tableau(const MilpProblem& problem, const LpOptions& options)
    : opt_(options), n_(problem.num_vars()) {
  std::vector<Sense> senses;
  for (const Row& row : problem.rows()) {
    if (row.terms.empty()) {
      const double tol = opt_.feasibility_tol;
      const bool ok = (row.sense == Sense::kLessEqual && 0.0 <= row.rhs + tol) ||
                      (row.sense == Sense::kGreaterEqual && 0.0 >= row.rhs - tol) ||
                      (row.sense == Sense::kEqual && std::abs(row.rhs) <= tol);
      if (!ok) trivially_infeasible_ = true;
      continue;
    }
    rows_.push_back(row.terms);
    b_.push_back(row.rhs);
    senses.push_back(row.sense);
  }
  m_ = static_cast<int>(rows_.size());
  N_ = n_ + m_;

  c_.assign(N_, 0.0);
  for (const Term& t : problem.objective().terms()) c_[t.var] += t.coef;
  lb_.resize(N_);
  ub_.resize(N_);
  for (int j = 0; j < n_; ++j) {
    lb_[j] = problem.var(j).lb;
    ub_[j] = problem.var(j).ub;
  }
  for (int i = 0; i < m_; ++i) {
    switch (senses[i]) {
      case Sense::kLessEqual: lb_[n_ + i] = 0.0; ub_[n_ + i] = kInf; break;
      case Sense::kGreaterEqual: lb_[n_ + i] = -kInf; ub_[n_ + i] = 0.0; break;
      case Sense::kEqual: lb_[n_ + i] = 0.0; ub_[n_ + i] = 0.0; break;
    }
  }
  x_.assign(N_, 0.0);
  d_.assign(N_, 0.0);
  status_.assign(N_, ColStatus::kAtLower);
  for (int j = 0; j < n_; ++j) {
    status_[j] = c_[j] >= 0.0 ? ColStatus::kAtLower : ColStatus::kAtUpper;
  }
  reset_to_slack_basis();
  compute_primal();
  compute_duals();
}

void Tableau::set_bounds(int j, double lb, double ub) {
  lb_[j] = lb;
  ub_[j] = ub;
  if (status_[j] == ColStatus::kBasic) return;
  const double v = status_[j] == ColStatus::kAtUpper ? ub : lb;
  const double delta = v - x_[j];
  if (delta == 0.0) return;
  x_[j] = v;
  for (int i = 0; i < m_; ++i) {
    const double a = at(i, j);
    if (a != 0.0) x_[basis_[i]] -= a * delta;
  }
}

void Tableau::reset_to_slack_basis() {
  T_.assign(static_cast<std::size_t>(m_) * N_, 0.0);
  beta_ = b_;
  basis_.resize(m_);
  row_of_.assign(N_, -1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : rows_[i]) at(i, t.var) = t.coef;
    at(i, n_ + i) = 1.0;
    basis_[i] = n_ + i;
    row_of_[n_ + i] = i;
    status_[n_ + i] = ColStatus::kBasic;
  }
  pivots_since_refactor_ = 0;
}

void Tableau::reinvert(std::vector<int> target_basic) {
  std::vector<ColStatus> saved = status_;
  reset_to_slack_basis();
  std::vector<char> wanted(N_, 0);
  for (int j : target_basic) wanted[j] = 1;
  for (int j = 0; j < N_; ++j) {
    if (!wanted[j] || row_of_[j] >= 0) continue;
    int best = -1;
    double best_abs = kPivotTol;
    for (int i = 0; i < m_; ++i) {
      if (wanted[basis_[i]]) continue;
      const double a = std::abs(at(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    // Singular target: keep the slack, leave j nonbasic.
    if (best < 0) continue;
    const int leaving = basis_[best];
    pivot(best, j);
    status_[leaving] = ColStatus::kAtLower;
  }
  for (int j = 0; j < N_; ++j) {
    if (row_of_[j] >= 0) {
      status_[j] = ColStatus::kBasic;
    } else if (saved[j] != ColStatus::kBasic) {
      status_[j] = saved[j];
    } else {
      status_[j] = ColStatus::kAtLower;
    }
    // A nonbasic column must sit at a finite bound.
    if (status_[j] == ColStatus::kAtLower && !std::isfinite(lb_[j])) {
      status_[j] = ColStatus::kAtUpper;
    } else if (status_[j] == ColStatus::kAtUpper && !std::isfinite(ub_[j])) {
      status_[j] = ColStatus::kAtLower;
    }
  }
  pivots_since_refactor_ = 0;
  compute_primal();
  compute_duals();
}

void Tableau::load(const BasisSnapshot& snap) {
  std::vector<char> wanted(N_, 0);
  for (int j : snap.basic) wanted[j] = 1;
  std::vector<char> free_row(m_, 0);
  for (int i = 0; i < m_; ++i) free_row[i] = !wanted[basis_[i]];
  bool ok = true;
  for (int j : snap.basic) {
    if (row_of_[j] >= 0) continue;
    int best = -1;
    double best_abs = 1e-7;
    for (int i = 0; i < m_; ++i) {
      if (!free_row[i]) continue;
      const double a = std::abs(at(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best < 0) {
      ok = false;
      break;
    }
    const int leaving = basis_[best];
    pivot(best, j);
    status_[leaving] = ColStatus::kAtLower;
    free_row[best] = 0;
  }
  for (int j = 0; j < N_; ++j) {
    if (row_of_[j] < 0) {
      status_[j] = snap.status[j] == ColStatus::kBasic ? ColStatus::kAtLower
                                                      : snap.status[j];
    }
  }
  if (!ok || pivots_since_refactor_ > opt_.refactor_interval) {
    reinvert(snap.basic);
    return;
  }
  for (int j = 0; j < N_; ++j) {
    if (status_[j] == ColStatus::kAtLower && !std::isfinite(lb_[j])) {
      status_[j] = ColStatus::kAtUpper;
    } else if (status_[j] == ColStatus::kAtUpper && !std::isfinite(ub_[j])) {
      status_[j] = ColStatus::kAtLower;
    }
  }
  compute_primal();
  compute_duals();
}

void Tableau::compute_primal() {
  for (int j = 0; j < N_; ++j) {
    if (status_[j] == ColStatus::kAtLower) x_[j] = lb_[j];
    else if (status_[j] == ColStatus::kAtUpper) x_[j] = ub_[j];
  }
  nz_.clear();
  for (int j = 0; j < N_; ++j) {
    if (status_[j] != ColStatus::kBasic && x_[j] != 0.0) nz_.push_back(j);
  }
  for (int i = 0; i < m_; ++i) {
    const double* row = &T_[static_cast<std::size_t>(i) * N_];
    double v = beta_[i];
    for (int j : nz_) v -= row[j] * x_[j];
    x_[basis_[i]] = v;
  }
}

void Tableau::compute_duals() {
  d_ = c_;
  for (int i = 0; i < m_; ++i) {
    const double cb = c_[basis_[i]];
    if (cb == 0.0) continue;
    const double* row = &T_[static_cast<std::size_t>(i) * N_];
    for (int j = 0; j < N_; ++j) {
      if (row[j] != 0.0) d_[j] -= cb * row[j];
    }
  }
  for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
}

void Tableau::pivot(int r, int q) {
  double* prow = &T_[static_cast<std::size_t>(r) * N_];
  const double inv = 1.0 / prow[q];
  nz_.clear();
  for (int k = 0; k < N_; ++k) {
    if (prow[k] == 0.0) continue;
    prow[k] *= inv;
    if (std::abs(prow[k]) < kZeroTol) {
      prow[k] = 0.0;
    } else {
      nz_.push_back(k);
    }
  }
  prow[q] = 1.0;
  beta_[r] *= inv;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* row = &T_[static_cast<std::size_t>(i) * N_];
    const double f = row[q];
    if (f == 0.0) continue;
    for (int k : nz_) {
      const double v = row[k] - f * prow[k];
      row[k] = std::abs(v) < kZeroTol ? 0.0 : v;
    }
    row[q] = 0.0;
    beta_[i] -= f * beta_[r];
  }
  const double dq = d_[q];
  if (dq != 0.0) {
    for (int k : nz_) d_[k] -= dq * prow[k];
  }
  d_[q] = 0.0;

  const int leaving = basis_[r];
  row_of_[leaving] = -1;
  basis_[r] = q;
  row_of_[q] = r;
  status_[q] = ColStatus::kBasic;
  ++pivots_since_refactor_;
}

double Tableau::objective() const {
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj += c_[j] * x_[j];
  return obj;
}

void Tableau::make_dual_feasible() {
  bool changed = false;
  for (int j = 0; j < N_; ++j) {
    if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
    if (status_[j] == ColStatus::kAtLower && d_[j] < -opt_.optimality_tol &&
        std::isfinite(ub_[j])) {
      status_[j] = ColStatus::kAtUpper;
      changed = true;
    } else if (status_[j] == ColStatus::kAtUpper && d_[j] > opt_.optimality_tol &&
               std::isfinite(lb_[j])) {
      status_[j] = ColStatus::kAtLower;
      changed = true;
    }
  }
  if (changed) compute_primal();
}

double Tableau::max_residual() const {
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    double act = x_[n_ + i];
    for (const Term& t : rows_[i]) act += t.coef * x_[t.var];
    worst = std::max(worst, std::abs(act - b_[i]));
  }
  return worst;
}

bool Tableau::stalled(double obj, double& last_obj, int& stall) const {
  if (std::abs(obj - last_obj) > 1e-9 * std::max(1.0, std::abs(obj))) {
    stall = 0;
  } else {
    ++stall;
  }
  last_obj = obj;
  return stall > opt_.stall_threshold;
}

void Tableau::enter_bland() {
  bland_ = true;
  used_bland_ = true;
}

// Dual degeneracy shows up as long runs of pivots with an unchanged
// objective. Spreading the reduced costs of the nonbasic columns by tiny,
// column-specific amounts breaks the ties that let the dual cycle. Shifts
// always point into the dual-feasible direction, so the basis stays dual
// feasible.
void Tableau::perturb_costs() {
  c_orig_ = c_;
  perturbed_ = true;
  for (int j = 0; j < N_; ++j) {
    if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
    // Deterministic spread in [1, 2) from a multiplicative hash of j.
    const double u = 1.0 + static_cast<double>((static_cast<std::uint32_t>(j) * 2654435761u) >> 8) /
                               static_cast<double>(1u << 24);
    const double shift = 1e-6 * u * (1.0 + std::abs(c_[j]));
    const double sign = status_[j] == ColStatus::kAtLower ? 1.0 : -1.0;
    c_[j] += sign * shift;
    d_[j] += sign * shift;
  }
}

void Tableau::restore_costs() {
  if (!perturbed_) return;
  c_ = c_orig_;
  perturbed_ = false;
  compute_duals();
}

void Tableau::maybe_refactor() {
  if (pivots_since_refactor_ >= opt_.refactor_interval) reinvert(basis_);
}

Tableau::Phase Tableau::dual_simplex() {
  const double ftol = opt_.feasibility_tol;
  double last_obj = objective();
  int stall = 0;
  const long limit = iterations_ + 50L * (m_ + N_) + 10000;
  while (true) {
    if (iterations_ > limit) {
      throw std::runtime_error("dual simplex iteration limit exceeded");
    }
    maybe_refactor();

    // Leaving row.
    int r = -1;
    double best = 0.0;
    bool to_lower = false;
    for (int i = 0; i < m_; ++i) {
      const int col = basis_[i];
      const double v = x_[col];
      double infeas = 0.0;
      bool low = false;
      if (v < lb_[col] - ftol) {
        infeas = lb_[col] - v;
        low = true;
      } else if (v > ub_[col] + ftol) {
        infeas = v - ub_[col];
      } else {
        continue;
      }
      if (bland_) {
        if (r < 0 || col < basis_[r]) {
          r = i;
          to_lower = low;
        }
      } else if (infeas > best) {
        best = infeas;
        r = i;
        to_lower = low;
      }
    }
    if (r < 0) return Phase::kDone;

    // Ratio test on row r.
    const double* row = &T_[static_cast<std::size_t>(r) * N_];
    int q = -1;
    if (bland_) {
      double min_ratio = kInf;
      for (int j = 0; j < N_; ++j) {
        if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
        const double a = row[j];
        const bool at_lower = status_[j] == ColStatus::kAtLower;
        const bool eligible = to_lower ? ((at_lower && a < -kPivotTol) || (!at_lower && a > kPivotTol))
                                       : ((at_lower && a > kPivotTol) || (!at_lower && a < -kPivotTol));
        if (!eligible) continue;
        const double dd = std::max(at_lower ? d_[j] : -d_[j], 0.0);
        const double ratio = dd / std::abs(a);
        if (ratio < min_ratio - 1e-12) {
          min_ratio = ratio;
          q = j;
        }
      }
    } else {
      double theta_max = kInf;
      for (int j = 0; j < N_; ++j) {
        if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
        const double a = row[j];
        const bool at_lower = status_[j] == ColStatus::kAtLower;
        const bool eligible = to_lower ? ((at_lower && a < -kPivotTol) || (!at_lower && a > kPivotTol))
                                       : ((at_lower && a > kPivotTol) || (!at_lower && a < -kPivotTol));
        if (!eligible) continue;
        const double dd = std::max(at_lower ? d_[j] : -d_[j], 0.0);
        theta_max = std::min(theta_max, (dd + opt_.optimality_tol) / std::abs(a));
      }
      double best_abs = 0.0;
      for (int j = 0; j < N_ && std::isfinite(theta_max); ++j) {
        if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
        const double a = row[j];
        const bool at_lower = status_[j] == ColStatus::kAtLower;
        const bool eligible = to_lower ? ((at_lower && a < -kPivotTol) || (!at_lower && a > kPivotTol))
                                       : ((at_lower && a > kPivotTol) || (!at_lower && a < -kPivotTol));
        if (!eligible) continue;
        const double dd = std::max(at_lower ? d_[j] : -d_[j], 0.0);
        if (dd / std::abs(a) <= theta_max && std::abs(a) > best_abs) {
          best_abs = std::abs(a);
          q = j;
        }
      }
    }
    if (q < 0) {
      if (pivots_since_refactor_ > 0) {
        reinvert(basis_);
        continue;
      }
      return Phase::kInfeasible;
    }

    // Primal update: the leaving column lands exactly on its violated bound.
    const int leaving = basis_[r];
    const double target = to_lower ? lb_[leaving] : ub_[leaving];
    const double delta = (x_[leaving] - target) / row[q];
    for (int i = 0; i < m_; ++i) {
      const double a = at(i, q);
      if (a != 0.0) x_[basis_[i]] -= a * delta;
    }
    x_[q] += delta;
    pivot(r, q);
    status_[leaving] = to_lower ? ColStatus::kAtLower : ColStatus::kAtUpper;
    x_[leaving] = target;
    ++iterations_;
    if (stalled(objective(), last_obj, stall) && !bland_) {
      // Perturbation first; Bland's rule if the perturbed problem stalls too.
      if (!perturbed_) {
        perturb_costs();
        last_obj = objective();
      } else {
        enter_bland();
      }
      stall = 0;
    }
  }
}

Tableau::Phase Tableau::primal_simplex() {
  const double otol = opt_.optimality_tol;
  const double ftol = opt_.feasibility_tol;
  double last_obj = objective();
  int stall = 0;
  const long limit = iterations_ + 50L * (m_ + N_) + 10000;
  while (true) {
    if (iterations_ > limit) {
      throw std::runtime_error("primal simplex iteration limit exceeded");
    }
    maybe_refactor();

    int q = -1;
    double best = 0.0;
    for (int j = 0; j < N_; ++j) {
      if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
      double viol = 0.0;
      if (status_[j] == ColStatus::kAtLower && d_[j] < -otol) viol = -d_[j];
      else if (status_[j] == ColStatus::kAtUpper && d_[j] > otol) viol = d_[j];
      else continue;
      if (bland_) {
        q = j;
        break;
      }
      if (viol > best) {
        best = viol;
        q = j;
      }
    }
    if (q < 0) return Phase::kDone;
    const double dir = status_[q] == ColStatus::kAtLower ? 1.0 : -1.0;

    // Harris two-pass ratio test over the basic columns.
    double theta_max = ub_[q] - lb_[q];
    for (int i = 0; i < m_; ++i) {
      const double a = at(i, q);
      if (std::abs(a) <= kPivotTol) continue;
      const double change = -a * dir;
      const int col = basis_[i];
      double limit_i;
      if (change < 0.0) {
        if (!std::isfinite(lb_[col])) continue;
        limit_i = (x_[col] - lb_[col] + (bland_ ? 0.0 : ftol)) / -change;
      } else {
        if (!std::isfinite(ub_[col])) continue;
        limit_i = (ub_[col] - x_[col] + (bland_ ? 0.0 : ftol)) / change;
      }
      theta_max = std::min(theta_max, std::max(limit_i, 0.0));
    }
    if (!std::isfinite(theta_max)) return Phase::kUnbounded;

    int r = -1;
    double step = theta_max;
    double best_abs = 0.0;
    if (theta_max < ub_[q] - lb_[q]) {
      for (int i = 0; i < m_; ++i) {
        const double a = at(i, q);
        if (std::abs(a) <= kPivotTol) continue;
        const double change = -a * dir;
        const int col = basis_[i];
        double exact;
        if (change < 0.0) {
          if (!std::isfinite(lb_[col])) continue;
          exact = (x_[col] - lb_[col]) / -change;
        } else {
          if (!std::isfinite(ub_[col])) continue;
          exact = (ub_[col] - x_[col]) / change;
        }
        exact = std::max(exact, 0.0);
        if (exact > theta_max) continue;
        const bool better = bland_ ? (r < 0 || col < basis_[r]) : std::abs(a) > best_abs;
        if (better) {
          best_abs = std::abs(a);
          r = i;
          step = exact;
        }
      }
    }

    // Move along the edge.
    for (int i = 0; i < m_; ++i) {
      const double a = at(i, q);
      if (a != 0.0) x_[basis_[i]] -= a * dir * step;
    }
    x_[q] += dir * step;
    if (r < 0) {
      status_[q] = dir > 0 ? ColStatus::kAtUpper : ColStatus::kAtLower;
      x_[q] = dir > 0 ? ub_[q] : lb_[q];
    } else {
      const int leaving = basis_[r];
      const bool to_lower = (-at(r, q) * dir) < 0.0;
      pivot(r, q);
      status_[leaving] = to_lower ? ColStatus::kAtLower : ColStatus::kAtUpper;
      x_[leaving] = to_lower ? lb_[leaving] : ub_[leaving];
    }
    ++iterations_;
    if (stalled(objective(), last_obj, stall)) enter_bland();
  }
}

LpOutcome Tableau::solve() {
  if (trivially_infeasible_) return LpOutcome::kInfeasible;
  bland_ = false;
  for (int j = 0; j < n_; ++j) {
    if (lb_[j] > ub_[j]) return LpOutcome::kInfeasible;
  }
  make_dual_feasible();
  for (int round = 0; round < 8; ++round) {
    Phase p = dual_simplex();
    restore_costs();
    bland_ = false;
    if (p == Phase::kInfeasible) return LpOutcome::kInfeasible;
    p = primal_simplex();
    if (p == Phase::kUnbounded) return LpOutcome::kUnbounded;
    if (max_residual() > 1e-9 || pivots_since_refactor_ > opt_.refactor_interval / 2) {
      reinvert(basis_);
    }
    bool feasible = true;
    for (int i = 0; i < m_ && feasible; ++i) {
      const int col = basis_[i];
      feasible = x_[col] >= lb_[col] - opt_.feasibility_tol &&
                 x_[col] <= ub_[col] + opt_.feasibility_tol;
    }
    bool optimal = true;
    for (int j = 0; j < N_ && optimal; ++j) {
      if (status_[j] == ColStatus::kBasic || lb_[j] == ub_[j]) continue;
      optimal = status_[j] == ColStatus::kAtLower ? d_[j] >= -opt_.optimality_tol
                                                  : d_[j] <= opt_.optimality_tol;
    }
    if (feasible && optimal) return LpOutcome::kOptimal;
    make_dual_feasible();
  }
  throw std::runtime_error("simplex failed to reach a consistent optimum");
}

}  // namespace dhcosim::milp::detail
