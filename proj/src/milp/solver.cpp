#include "dhcosim/milp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <unordered_map>
#include <utility>

#include "tableau.hpp"

namespace dhcosim::milp {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kGapLimit: return "gap-limit";
    case SolveStatus::kNodeLimit: return "node-limit";
  }
  return "unknown";
}

LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options) {
  detail::Tableau tableau(problem, options);
  LpSolution sol;
  switch (tableau.solve()) {
    case detail::LpOutcome::kOptimal:
      sol.status = SolveStatus::kOptimal;
      sol.values = tableau.structural_values();
      sol.objective = problem.evaluate(sol.values);
      break;
    case detail::LpOutcome::kInfeasible: sol.status = SolveStatus::kInfeasible; break;
    case detail::LpOutcome::kUnbounded: sol.status = SolveStatus::kUnbounded; break;
  }
  sol.iterations = tableau.iterations();
  sol.used_bland = tableau.used_bland();
  return sol;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kDiveInterval = 100;  // nodes between diving heuristic runs

// Branching decisions form a persistent linked list shared between siblings.
struct Fixing {
  int var;
  double value;
  std::shared_ptr<const Fixing> parent;
};

struct Node {
  long id;
  int depth;
  double bound;
  std::shared_ptr<const Fixing> fixings;
  std::shared_ptr<const detail::BasisSnapshot> basis;
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpProblem& problem, const MilpOptions& options)
      : problem_(problem), opt_(options), tableau_(problem, options.lp) {
    for (int j = 0; j < problem.num_vars(); ++j) {
      if (problem.var(j).kind == VarKind::kBinary) binaries_.push_back(j);
    }
    obj_coef_.assign(problem.num_vars(), 0.0);
    for (const Term& t : problem.objective().terms()) obj_coef_[t.var] += t.coef;
    columns_.resize(problem.num_vars());
    for (int i = 0; i < problem.num_rows(); ++i) {
      for (const Term& t : problem.rows()[i].terms) columns_[t.var].push_back({i, t.coef});
    }
  }

  MilpSolution run() {
    const auto start = std::chrono::steady_clock::now();
    MilpSolution out;

    push(Node{next_id_++, 0, -kInf, nullptr, nullptr});
    bool limit_hit = false;
    while (!open_.empty()) {
      if (has_incumbent_ && incumbent_obj_ - global_bound() <= opt_.gap_tol) break;
      if (nodes_ >= opt_.node_limit) {
        out.status = SolveStatus::kNodeLimit;
        limit_hit = true;
        break;
      }
      if (opt_.time_limit_s > 0.0 && elapsed(start) > opt_.time_limit_s) {
        out.status = SolveStatus::kGapLimit;
        limit_hit = true;
        break;
      }
      Node node = pop();
      if (has_incumbent_ && node.bound >= incumbent_obj_ - opt_.gap_tol) continue;
      process(node);
    }

    out.nodes = nodes_;
    out.lp_iterations = tableau_.iterations();
    if (has_incumbent_) {
      out.values = incumbent_;
      out.objective = incumbent_obj_;
    }
    if (!limit_hit) {
      out.status = has_incumbent_ ? SolveStatus::kOptimal
                   : unbounded_   ? SolveStatus::kUnbounded
                                  : SolveStatus::kInfeasible;
    }
    const double open_bound = global_bound();
    out.best_bound = has_incumbent_ ? std::min(open_bound, incumbent_obj_) : open_bound;
    if (!has_incumbent_ && open_.empty()) out.best_bound = kInf;
    out.wall_time_s = elapsed(start);
    return out;
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }

  // Diving takes the newest node; best-bound takes the lowest (bound, id).
  void push(Node node) {
    const long id = node.id;
    by_bound_.insert({node.bound, id});
    nodes_by_id_.emplace(id, std::move(node));
    open_.insert(id);
  }

  Node pop() {
    long id;
    if (!has_incumbent_) {
      id = *open_.rbegin();
    } else {
      id = by_bound_.begin()->second;
    }
    auto it = nodes_by_id_.find(id);
    Node node = std::move(it->second);
    nodes_by_id_.erase(it);
    open_.erase(id);
    by_bound_.erase({node.bound, id});
    return node;
  }

  double global_bound() const {
    return by_bound_.empty() ? kInf : by_bound_.begin()->first;
  }

  void apply_bounds(const Node& node) {
    for (int j : binaries_) {
      tableau_.set_bounds(j, problem_.var(j).lb, problem_.var(j).ub);
    }
    for (const Fixing* f = node.fixings.get(); f != nullptr; f = f->parent.get()) {
      tableau_.set_bounds(f->var, f->value, f->value);
    }
  }

  void process(const Node& node) {
    ++nodes_;
    if (node.basis) tableau_.load(*node.basis);
    apply_bounds(node);
    const detail::LpOutcome outcome = tableau_.solve();
    if (outcome == detail::LpOutcome::kInfeasible) return;
    if (outcome == detail::LpOutcome::kUnbounded) {
      unbounded_ = true;
      return;
    }
    const double obj = tableau_.objective() + problem_.objective().constant();
    if (has_incumbent_ && obj >= incumbent_obj_ - opt_.gap_tol) return;

    std::vector<double> x = tableau_.structural_values();
    std::vector<double> act(problem_.num_rows());
    for (int i = 0; i < problem_.num_rows(); ++i) act[i] = problem_.row_activity(i, x);

    // Fractional binaries whose rounding keeps every row satisfied and does
    // not raise the objective are rounded in place. The result is another
    // optimal point of this node's LP, so the bound is unchanged, and only
    // the binaries that really conflict with a row are left to branch on.
    for (int j : binaries_) {
      if (is_fractional(x[j])) try_round(j, x, act, /*allow_worse=*/false);
    }

    int branch_var = -1;
    double best_frac = opt_.integrality_tol;
    for (int j : binaries_) {
      const double frac = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      for (int j : binaries_) x[j] = std::round(x[j]);
      offer_incumbent(std::move(x));
      return;
    }

    // Simple rounding heuristic: round the rest as well, accepting a worse
    // objective, to get an incumbent early.
    {
      std::vector<double> y = x;
      std::vector<double> act_y = act;
      bool ok = true;
      for (int j : binaries_) {
        if (is_fractional(y[j]) && !try_round(j, y, act_y, /*allow_worse=*/true)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (int j : binaries_) y[j] = std::round(y[j]);
        const double value = problem_.evaluate(y);
        offer_incumbent(std::move(y));
        if (value <= obj + opt_.gap_tol) return;
      }
    }

    auto basis = std::make_shared<const detail::BasisSnapshot>(tableau_.snapshot());
    if (nodes_ == 1 || nodes_ % kDiveInterval == 0) dive(x);
    const double v = x[branch_var];
    const double first = v >= 0.5 ? 0.0 : 1.0;  // pushed first, explored second
    for (double value : {first, 1.0 - first}) {
      auto fix = std::make_shared<const Fixing>(Fixing{branch_var, value, node.fixings});
      push(Node{next_id_++, node.depth + 1, obj, std::move(fix), basis});
    }
  }

  // Diving heuristic: take the binary closest to integrality, fix it to
  // whichever value gives the lower LP objective, and repeat until the LP
  // point is integral (a new incumbent) or the dive becomes infeasible or no
  // better than the incumbent. Only this node's tableau bounds are touched;
  // the next node resets them.
  void dive(std::vector<double> x) {
    std::vector<double> act(problem_.num_rows());
    for (std::size_t step = 0; step < binaries_.size(); ++step) {
      int pick = -1;
      double closest = 1.0;
      for (int j : binaries_) {
        if (!is_fractional(x[j])) continue;
        const double frac = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
        if (frac < closest) {
          closest = frac;
          pick = j;
        }
      }
      if (pick < 0) {
        for (int j : binaries_) x[j] = std::round(x[j]);
        offer_incumbent(std::move(x));
        return;
      }
      const double rounded = std::round(x[pick]);
      double best_value = -1.0;
      double best_obj = kInf;
      for (double value : {rounded, 1.0 - rounded}) {
        tableau_.set_bounds(pick, value, value);
        if (tableau_.solve() != detail::LpOutcome::kOptimal) continue;
        const double obj = tableau_.objective();
        if (obj < best_obj - opt_.lp.optimality_tol) {
          best_obj = obj;
          best_value = value;
        }
      }
      if (best_value < 0.0) return;
      if (best_value != 1.0 - rounded) {
        tableau_.set_bounds(pick, best_value, best_value);
        if (tableau_.solve() != detail::LpOutcome::kOptimal) return;
      }
      const double obj = tableau_.objective() + problem_.objective().constant();
      if (has_incumbent_ && obj >= incumbent_obj_ - opt_.gap_tol) return;
      x = tableau_.structural_values();
      for (int i = 0; i < problem_.num_rows(); ++i) act[i] = problem_.row_activity(i, x);
      for (int j : binaries_) {
        if (is_fractional(x[j])) try_round(j, x, act, /*allow_worse=*/false);
      }
    }
  }

  bool is_fractional(double v) const {
    return std::abs(v - std::round(v)) > opt_.integrality_tol;
  }

  void offer_incumbent(std::vector<double> values) {
    const double value = problem_.evaluate(values);
    if (!has_incumbent_ || value < incumbent_obj_) {
      incumbent_ = std::move(values);
      incumbent_obj_ = value;
      has_incumbent_ = true;
      prune_open();
    }
  }

  // Moves binary j of point x to an integer neighbour within the node bounds
  // if every row it appears in stays satisfied (cheaper direction first).
  // Without allow_worse only moves that do not raise the objective count.
  bool try_round(int j, std::vector<double>& x, std::vector<double>& act, bool allow_worse) const {
    const double tol = opt_.lp.feasibility_tol;
    const auto& rows = problem_.rows();
    const double lo = std::floor(x[j]);
    const double c = obj_coef_[j];
    const double first = c > 0.0 ? lo : lo + 1.0;
    for (double target : {first, 2.0 * lo + 1.0 - first}) {
      if (target < tableau_.lower(j) || target > tableau_.upper(j)) continue;
      const double delta = target - x[j];
      if (!allow_worse && c * delta > 0.0) continue;
      bool ok = true;
      for (const auto& [i, coef] : columns_[j]) {
        const double a = act[i] + coef * delta;
        const double scale = tol * (1.0 + std::abs(rows[i].rhs));
        switch (rows[i].sense) {
          case Sense::kLessEqual: ok = a <= rows[i].rhs + scale; break;
          case Sense::kGreaterEqual: ok = a >= rows[i].rhs - scale; break;
          case Sense::kEqual: ok = std::abs(a - rows[i].rhs) <= scale; break;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      for (const auto& [i, coef] : columns_[j]) act[i] += coef * delta;
      x[j] = target;
      return true;
    }
    return false;
  }

  void prune_open() {
    const double cutoff = incumbent_obj_ - opt_.gap_tol;
    while (!by_bound_.empty() && std::prev(by_bound_.end())->first >= cutoff) {
      const long id = std::prev(by_bound_.end())->second;
      by_bound_.erase(std::prev(by_bound_.end()));
      open_.erase(id);
      nodes_by_id_.erase(id);
    }
  }

  const MilpProblem& problem_;
  MilpOptions opt_;
  detail::Tableau tableau_;
  std::vector<int> binaries_;
  std::vector<std::vector<std::pair<int, double>>> columns_;  // (row, coef) per variable
  std::vector<double> obj_coef_;

  std::set<std::pair<double, long>> by_bound_;
  std::set<long> open_;
  std::unordered_map<long, Node> nodes_by_id_;
  long next_id_ = 0;
  long nodes_ = 0;

  bool has_incumbent_ = false;
  bool unbounded_ = false;
  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
};

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  return BranchAndBound(problem, options).run();
}

}  // namespace dhcosim::milp
