#include "dhcosim/milp/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dhcosim::milp {

const char* to_string(Sense sense) {
  switch (sense) {
    case Sense::kLessEqual: return "<=";
    case Sense::kGreaterEqual: return ">=";
    case Sense::kEqual: return "=";
  }
  return "?";
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  terms_.reserve(terms_.size() + other.terms_.size());
  for (const Term& t : other.terms_) terms_.push_back({t.var, -t.coef});
  constant_ -= other.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (Term& t : terms_) t.coef *= k;
  constant_ *= k;
  return *this;
}

void LinExpr::normalize() {
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Term& a, const Term& b) { return a.var < b.var; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms_.size();) {
    Term merged = terms_[i++];
    while (i < terms_.size() && terms_[i].var == merged.var) {
      merged.coef += terms_[i++].coef;
    }
    if (merged.coef != 0.0) terms_[out++] = merged;
  }
  terms_.resize(out);
}

double LinExpr::coef(VarId v) const {
  double sum = 0.0;
  for (const Term& t : terms_) {
    if (t.var == v.index) sum += t.coef;
  }
  return sum;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double k, LinExpr e) { return e *= k; }
LinExpr operator*(LinExpr e, double k) { return e *= k; }

namespace {

LinConstraint make_constraint(LinExpr lhs, const LinExpr& rhs, Sense sense) {
  lhs -= rhs;
  const double c = lhs.constant();
  lhs.add_constant(-c);
  return {std::move(lhs), sense, -c};
}

}  // namespace

LinConstraint operator<=(LinExpr lhs, const LinExpr& rhs) {
  return make_constraint(std::move(lhs), rhs, Sense::kLessEqual);
}
LinConstraint operator>=(LinExpr lhs, const LinExpr& rhs) {
  return make_constraint(std::move(lhs), rhs, Sense::kGreaterEqual);
}
LinConstraint operator==(LinExpr lhs, const LinExpr& rhs) {
  return make_constraint(std::move(lhs), rhs, Sense::kEqual);
}

VarId MilpProblem::add_var(std::string name, VarKind kind, double lb,
                           double ub) {
  if (!std::isfinite(lb) || !std::isfinite(ub) || lb > ub) {
    throw InvalidBounds(
        fmt::format("variable '{}' has invalid bounds [{}, {}]", name, lb, ub));
  }
  if (kind == VarKind::kBinary && (lb < 0.0 || ub > 1.0)) {
    throw InvalidBounds(fmt::format(
        "binary variable '{}' bounds [{}, {}] exceed [0, 1]", name, lb, ub));
  }
  const int index = num_vars();
  auto [it, inserted] = by_name_.try_emplace(name, index);
  if (!inserted) throw DuplicateName("duplicate variable name '" + name + "'");
  vars_.push_back({std::move(name), kind, lb, ub});
  return VarId{index};
}

void MilpProblem::check_var(int index) const {
  if (index < 0 || index >= num_vars()) {
    throw UnknownVariable(fmt::format("variable index {} does not exist", index));
  }
}

int MilpProblem::add_constraint(LinExpr expr, Sense sense, double rhs,
                                std::string name) {
  expr.normalize();
  for (const Term& t : expr.terms()) check_var(t.var);
  if (!std::isfinite(rhs)) {
    throw InvalidArgument("constraint right-hand side must be finite");
  }
  const double folded = rhs - expr.constant();
  if (name.empty()) name = fmt::format("c{}", rows_.size());
  rows_.push_back({std::move(name), expr.terms(), sense, folded});
  return num_rows() - 1;
}

void MilpProblem::set_objective(LinExpr expr) {
  expr.normalize();
  for (const Term& t : expr.terms()) check_var(t.var);
  objective_ = std::move(expr);
}

void MilpProblem::set_bounds(VarId v, double lb, double ub) {
  check_var(v.index);
  Variable& var = vars_[v.index];
  if (!std::isfinite(lb) || !std::isfinite(ub) || lb > ub ||
      (var.kind == VarKind::kBinary && (lb < 0.0 || ub > 1.0))) {
    throw InvalidBounds(fmt::format("invalid bounds [{}, {}] for '{}'", lb, ub,
                                    var.name));
  }
  var.lb = lb;
  var.ub = ub;
}

int MilpProblem::num_binaries() const {
  return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) {
    return v.kind == VarKind::kBinary;
  }));
}

std::size_t MilpProblem::num_nonzeros() const {
  std::size_t n = 0;
  for (const Row& r : rows_) n += r.terms.size();
  return n;
}

VarId MilpProblem::find_var(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? VarId{-1} : VarId{it->second};
}

double MilpProblem::evaluate(const std::vector<double>& values) const {
  double sum = objective_.constant();
  for (const Term& t : objective_.terms()) sum += t.coef * values.at(t.var);
  return sum;
}

double MilpProblem::row_activity(int row, const std::vector<double>& values) const {
  double sum = 0.0;
  for (const Term& t : rows_.at(row).terms) sum += t.coef * values.at(t.var);
  return sum;
}

}  // namespace dhcosim::milp
