#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dhcosim/core/errors.hpp"

namespace dhcosim::milp {

DHCOSIM_DEFINE_ERROR(DuplicateName);
DHCOSIM_DEFINE_ERROR(InvalidBounds);
DHCOSIM_DEFINE_ERROR(UnknownVariable);

enum class VarKind : std::uint8_t { kContinuous, kBinary };
enum class Sense : std::uint8_t { kLessEqual, kGreaterEqual, kEqual };

const char* to_string(Sense sense);

struct VarId {
  int index = -1;
  friend bool operator==(VarId, VarId) = default;
};

struct Term {
  int var;
  double coef;
  friend bool operator==(const Term&, const Term&) = default;
};

// Affine expression sum(coef * var) + constant. Terms are appended lazily and
// merged on `normalize()`; merging sums the coefficients of repeated variables.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT
  LinExpr(VarId v) { terms_.push_back({v.index, 1.0}); }  // NOLINT

  LinExpr& add(VarId v, double coef) {
    terms_.push_back({v.index, coef});
    return *this;
  }
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  void reserve(std::size_t n) { terms_.reserve(n); }

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double k);

  // Sorts by variable, merges duplicates, drops exact zeros.
  void normalize();
  LinExpr normalized() const {
    LinExpr e = *this;
    e.normalize();
    return e;
  }

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }

  // Coefficient of v after merging (does not require normalize()).
  double coef(VarId v) const;

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double k, LinExpr e);
LinExpr operator*(LinExpr e, double k);

struct LinConstraint {
  LinExpr expr;  // constant already folded into rhs
  Sense sense;
  double rhs;
};

LinConstraint operator<=(LinExpr lhs, const LinExpr& rhs);
LinConstraint operator>=(LinExpr lhs, const LinExpr& rhs);
LinConstraint operator==(LinExpr lhs, const LinExpr& rhs);

struct Variable {
  std::string name;
  VarKind kind;
  double lb;
  double ub;
};

struct Row {
  std::string name;
  std::vector<Term> terms;  // sorted by variable, no duplicates
  Sense sense;
  double rhs;
};

// Minimization MILP with binary and continuous variables, all with finite
// bounds. Maximization objectives are stored negated.
class MilpProblem {
 public:
  VarId add_var(std::string name, VarKind kind, double lb, double ub);
  VarId add_continuous(std::string name, double lb, double ub) {
    return add_var(std::move(name), VarKind::kContinuous, lb, ub);
  }
  VarId add_binary(std::string name) {
    return add_var(std::move(name), VarKind::kBinary, 0.0, 1.0);
  }

  int add_constraint(LinExpr expr, Sense sense, double rhs,
                     std::string name = {});
  int add_constraint(LinConstraint c, std::string name = {}) {
    return add_constraint(std::move(c.expr), c.sense, c.rhs, std::move(name));
  }

  void set_objective(LinExpr expr);
  void maximize(LinExpr expr) { set_objective(-std::move(expr)); }

  // Tightens the bounds of an existing variable (used for branching and for
  // fixing variables by hand).
  void set_bounds(VarId v, double lb, double ub);

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const;
  std::size_t num_nonzeros() const;

  const Variable& var(VarId v) const { return vars_.at(v.index); }
  const Variable& var(int i) const { return vars_.at(i); }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Row>& rows() const { return rows_; }
  const LinExpr& objective() const { return objective_; }

  // VarId{-1} when absent.
  VarId find_var(std::string_view name) const;

  // Objective value (including constant) of a full assignment.
  double evaluate(const std::vector<double>& values) const;
  double row_activity(int row, const std::vector<double>& values) const;

  void reserve(std::size_t vars, std::size_t rows) {
    vars_.reserve(vars);
    rows_.reserve(rows);
    by_name_.reserve(vars);
  }

 private:
  void check_var(int index) const;

  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  LinExpr objective_;
  std::unordered_map<std::string, int> by_name_;
};

}  // namespace dhcosim::milp
