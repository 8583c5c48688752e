#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dhcosim/core/errors.hpp"
#include "dhcosim/milp/model.hpp"

namespace dhcosim::milp {

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// CPLEX-style LP text format. Every variable is written in the Bounds section
// so that import(export(p)) reproduces all columns, including unused ones.
void write_lp(const MilpProblem& problem, std::ostream& out);
void export_lp(const MilpProblem& problem, const std::filesystem::path& path);

MilpProblem read_lp(std::istream& in);
MilpProblem import_lp(const std::filesystem::path& path);

}  // namespace dhcosim::milp
