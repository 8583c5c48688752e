#include "dhcosim/milp/lp_format.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace dhcosim::milp {

namespace {

constexpr std::size_t kWrapColumn = 200;

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  const unsigned char first = static_cast<unsigned char>(name.front());
  if (std::isdigit(first) || first == '.') return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || std::string_view("_.[](){}#$%&!?@~'|").find(c) !=
                                  std::string_view::npos;
  });
}

class LineWriter {
 public:
  explicit LineWriter(std::ostream& out) : out_(out) {}
  void start(const std::string& head) {
    line_ = head;
  }
  void add(const std::string& piece) {
    if (line_.size() + piece.size() + 1 > kWrapColumn) {
      out_ << line_ << '\n';
      line_ = "   ";
    }
    line_ += ' ';
    line_ += piece;
  }
  void finish() {
    out_ << line_ << '\n';
    line_.clear();
  }

 private:
  std::ostream& out_;
  std::string line_;
};

std::string term_text(double coef, const std::string& name) {
  return fmt::format("{} {} {}", coef < 0 ? '-' : '+', std::abs(coef), name);
}

}  // namespace

void write_lp(const MilpProblem& problem, std::ostream& out) {
  for (const Variable& v : problem.vars()) {
    if (!valid_name(v.name)) {
      throw InvalidArgument("variable name '" + v.name + "' is not LP-safe");
    }
  }
  out << "\\ written by dhcosim\n";
  out << "Minimize\n";
  LineWriter w(out);
  w.start(" obj:");
  for (const Term& t : problem.objective().terms()) {
    w.add(term_text(t.coef, problem.var(t.var).name));
  }
  if (problem.objective().constant() != 0.0 || problem.objective().terms().empty()) {
    const double k = problem.objective().constant();
    w.add(fmt::format("{} {}", k < 0 ? '-' : '+', std::abs(k)));
  }
  w.finish();

  out << "Subject To\n";
  for (const Row& row : problem.rows()) {
    if (!valid_name(row.name)) {
      throw InvalidArgument("row name '" + row.name + "' is not LP-safe");
    }
    w.start(" " + row.name + ":");
    if (row.terms.empty()) w.add("0");
    for (const Term& t : row.terms) w.add(term_text(t.coef, problem.var(t.var).name));
    w.add(fmt::format("{} {}", to_string(row.sense), row.rhs));
    w.finish();
  }

  out << "Bounds\n";
  for (const Variable& v : problem.vars()) {
    if (v.lb == v.ub) {
      out << fmt::format(" {} = {}\n", v.name, v.lb);
    } else {
      out << fmt::format(" {} <= {} <= {}\n", v.lb, v.name, v.ub);
    }
  }
  bool any_binary = false;
  for (const Variable& v : problem.vars()) {
    if (v.kind != VarKind::kBinary) continue;
    if (!any_binary) out << "Binaries\n";
    any_binary = true;
    out << ' ' << v.name << '\n';
  }
  out << "End\n";
}

void export_lp(const MilpProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_lp(problem, out);
}

namespace {

enum class TokKind { kNumber, kName, kSense, kSign, kColon, kKeyword };

struct Token {
  TokKind kind;
  std::string text;
  double number = 0.0;
  int line = 0;
};

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kEnd };

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Recognises a section keyword at the start of a line; returns consumed length.
std::optional<std::pair<Section, std::size_t>> match_section(const std::string& line,
                                                            bool& maximize, int line_no) {
  std::istringstream ss(line);
  std::string w1, w2;
  ss >> w1;
  const std::string a = lower(w1);
  ss >> w2;
  const std::string b = lower(w2);
  auto first_len = line.find(w1) + w1.size();
  if (a == "minimize" || a == "minimum" || a == "min" || a == "minimise") {
    maximize = false;
    return std::make_pair(Section::kObjective, first_len);
  }
  if (a == "maximize" || a == "maximum" || a == "max" || a == "maximise") {
    maximize = true;
    return std::make_pair(Section::kObjective, first_len);
  }
  if ((a == "subject" && b == "to") || (a == "such" && b == "that")) {
    return std::make_pair(Section::kConstraints, line.find(w2) + w2.size());
  }
  if (a == "st" || a == "s.t." || a == "st.") {
    return std::make_pair(Section::kConstraints, first_len);
  }
  if (a == "bounds" || a == "bound") return std::make_pair(Section::kBounds, first_len);
  if (a == "binary" || a == "binaries" || a == "bin") {
    return std::make_pair(Section::kBinaries, first_len);
  }
  if (a == "general" || a == "generals" || a == "gen" || a == "integer" ||
      a == "integers" || a == "semi-continuous" || a == "sos") {
    throw ParseError(line_no, "section '" + w1 + "' is not supported (binary MILP only)");
  }
  if (a == "end") return std::make_pair(Section::kEnd, first_len);
  return std::nullopt;
}

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) ||
         std::string_view("_.[](){}#$%&!?@~'|\"/,;`").find(c) != std::string_view::npos;
}

void tokenize_line(const std::string& text, int line_no, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '<' || c == '>' || c == '=' || c == '!') {
      std::size_t j = i;
      while (j < text.size() && std::string_view("<>=!").find(text[j]) != std::string_view::npos) ++j;
      const std::string op = text.substr(i, j - i);
      static const std::map<std::string, std::string> kSenses = {
          {"<=", "<="}, {"=<", "<="}, {"<", "<="}, {">=", ">="},
          {"=>", ">="}, {">", ">="}, {"=", "="}};
      auto it = kSenses.find(op);
      if (it == kSenses.end()) {
        throw ParseError(line_no, "malformed sense token '" + op + "'");
      }
      out.push_back({TokKind::kSense, it->second, 0.0, line_no});
      i = j;
      continue;
    }
    if (c == '+' || c == '-') {
      out.push_back({TokKind::kSign, std::string(1, c), 0.0, line_no});
      ++i;
      continue;
    }
    if (c == ':') {
      out.push_back({TokKind::kColon, ":", 0.0, line_no});
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(text.data() + i, text.data() + text.size(), v);
      if (res.ec != std::errc()) throw ParseError(line_no, "malformed number");
      out.push_back({TokKind::kNumber, text.substr(i, res.ptr - (text.data() + i)), v, line_no});
      i = static_cast<std::size_t>(res.ptr - text.data());
      continue;
    }
    if (name_char(c)) {
      std::size_t j = i;
      while (j < text.size() && name_char(text[j])) ++j;
      std::string name = text.substr(i, j - i);
      const std::string l = lower(name);
      if (l == "inf" || l == "infinity") {
        out.push_back({TokKind::kNumber, name, std::numeric_limits<double>::infinity(), line_no});
      } else if (l == "free") {
        out.push_back({TokKind::kKeyword, "free", 0.0, line_no});
      } else {
        out.push_back({TokKind::kName, name, 0.0, line_no});
      }
      i = j;
      continue;
    }
    throw ParseError(line_no, fmt::format("unexpected character '{}'", c));
  }
}

struct ParsedVar {
  std::string name;
  double lb = 0.0;
  double ub = std::numeric_limits<double>::infinity();
  bool binary = false;
  int line = 0;
};

class LpReader {
 public:
  MilpProblem read(std::istream& in) {
    std::string raw;
    int line_no = 0;
    Section section = Section::kNone;
    int end_line = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      end_line = line_no;
      if (auto bs = raw.find('\\'); bs != std::string::npos) raw.resize(bs);
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (raw.front() != ' ' && raw.front() != '\t') {
        if (auto m = match_section(raw, maximize_, line_no)) {
          flush(section);
          section = m->first;
          raw = raw.substr(m->second);
          if (section == Section::kEnd) break;
          tokenize_line(raw, line_no, pending_);
          continue;
        }
      }
      if (section == Section::kNone) {
        throw ParseError(line_no, "content before the objective section");
      }
      tokenize_line(raw, line_no, pending_);
      if (section == Section::kBounds || section == Section::kBinaries) flush(section);
    }
    if (section != Section::kEnd) flush(section);
    return build(end_line);
  }

 private:
  int var_index(const std::string& name, int line) {
    auto [it, inserted] = index_.try_emplace(name, static_cast<int>(vars_.size()));
    if (inserted) vars_.push_back({name, 0.0, std::numeric_limits<double>::infinity(), false, line});
    return it->second;
  }

  // Parses "[sign] [number] [name]" terms until a sense token or end.
  std::size_t parse_expr(std::size_t i, LinExpr& expr, double& constant) {
    while (i < pending_.size() && pending_[i].kind != TokKind::kSense) {
      double sign = 1.0;
      bool saw_sign = false;
      while (i < pending_.size() && pending_[i].kind == TokKind::kSign) {
        if (pending_[i].text == "-") sign = -sign;
        saw_sign = true;
        ++i;
      }
      if (i >= pending_.size()) throw ParseError(pending_.back().line, "dangling sign");
      double coef = 1.0;
      bool has_coef = false;
      if (pending_[i].kind == TokKind::kNumber) {
        coef = pending_[i].number;
        has_coef = true;
        ++i;
      }
      if (i < pending_.size() && pending_[i].kind == TokKind::kName) {
        expr.add(VarId{var_index(pending_[i].text, pending_[i].line)}, sign * coef);
        ++i;
      } else if (has_coef) {
        constant += sign * coef;
      } else {
        const int line = i < pending_.size() ? pending_[i].line : pending_.back().line;
        throw ParseError(line, saw_sign ? "expected a term after sign" : "expected a term");
      }
    }
    return i;
  }

  void flush(Section section) {
    if (pending_.empty()) return;
    switch (section) {
      case Section::kObjective: flush_objective(); break;
      case Section::kConstraints: flush_constraints(); break;
      case Section::kBounds: flush_bound(); break;
      case Section::kBinaries: flush_binaries(); break;
      default: throw ParseError(pending_.front().line, "unexpected content");
    }
    pending_.clear();
  }

  void flush_objective() {
    std::size_t i = 0;
    if (pending_.size() >= 2 && pending_[0].kind == TokKind::kName &&
        pending_[1].kind == TokKind::kColon) {
      i = 2;
    }
    double constant = 0.0;
    i = parse_expr(i, objective_, constant);
    if (i != pending_.size()) throw ParseError(pending_[i].line, "sense token in objective");
    objective_.add_constant(constant);
  }

  void flush_constraints() {
    std::size_t i = 0;
    while (i < pending_.size()) {
      ParsedRow row;
      row.line = pending_[i].line;
      if (i + 1 < pending_.size() && pending_[i].kind == TokKind::kName &&
          pending_[i + 1].kind == TokKind::kColon) {
        row.name = pending_[i].text;
        i += 2;
      }
      double constant = 0.0;
      i = parse_expr(i, row.expr, constant);
      if (i >= pending_.size()) throw ParseError(row.line, "constraint without sense");
      const std::string sense = pending_[i++].text;
      row.sense = sense == "<=" ? Sense::kLessEqual
                  : sense == ">=" ? Sense::kGreaterEqual
                                  : Sense::kEqual;
      double sign = 1.0;
      while (i < pending_.size() && pending_[i].kind == TokKind::kSign) {
        if (pending_[i].text == "-") sign = -sign;
        ++i;
      }
      if (i >= pending_.size() || pending_[i].kind != TokKind::kNumber) {
        throw ParseError(row.line, "constraint right-hand side must be a number");
      }
      row.rhs = sign * pending_[i++].number - constant;
      rows_.push_back(std::move(row));
    }
  }

  double read_number(std::size_t& i) {
    double sign = 1.0;
    while (i < pending_.size() && pending_[i].kind == TokKind::kSign) {
      if (pending_[i].text == "-") sign = -sign;
      ++i;
    }
    if (i >= pending_.size() || pending_[i].kind != TokKind::kNumber) {
      throw ParseError(pending_.front().line, "expected a number in bound");
    }
    return sign * pending_[i++].number;
  }

  void flush_bound() {
    const int line = pending_.front().line;
    std::size_t i = 0;
    auto is_num_start = [&](std::size_t k) {
      return k < pending_.size() &&
             (pending_[k].kind == TokKind::kNumber || pending_[k].kind == TokKind::kSign);
    };
    if (is_num_start(0)) {
      // lo <= x [<= hi]
      const double lo = read_number(i);
      if (i >= pending_.size() || pending_[i].kind != TokKind::kSense) {
        throw ParseError(line, "expected sense in bound");
      }
      const std::string s1 = pending_[i++].text;
      if (i >= pending_.size() || pending_[i].kind != TokKind::kName) {
        throw ParseError(line, "expected variable name in bound");
      }
      ParsedVar& v = vars_[var_index(pending_[i].text, line)];
      ++i;
      if (s1 == "<=") v.lb = lo;
      else if (s1 == ">=") v.ub = lo;
      else { v.lb = lo; v.ub = lo; }
      if (i < pending_.size()) {
        if (pending_[i].kind != TokKind::kSense) throw ParseError(line, "malformed bound");
        const std::string s2 = pending_[i++].text;
        const double hi = read_number(i);
        if (s2 == "<=") v.ub = hi;
        else if (s2 == ">=") v.lb = hi;
        else throw ParseError(line, "malformed double bound");
      }
    } else if (!pending_.empty() && pending_[0].kind == TokKind::kName) {
      ParsedVar& v = vars_[var_index(pending_[0].text, line)];
      i = 1;
      if (i < pending_.size() && pending_[i].kind == TokKind::kKeyword) {
        v.lb = -std::numeric_limits<double>::infinity();
        v.ub = std::numeric_limits<double>::infinity();
        ++i;
      } else {
        if (i >= pending_.size() || pending_[i].kind != TokKind::kSense) {
          throw ParseError(line, "expected sense in bound");
        }
        const std::string s = pending_[i++].text;
        const double val = read_number(i);
        if (s == "<=") v.ub = val;
        else if (s == ">=") v.lb = val;
        else { v.lb = val; v.ub = val; }
      }
    } else {
      throw ParseError(line, "malformed bound");
    }
    if (i != pending_.size()) throw ParseError(line, "trailing tokens in bound");
  }

  void flush_binaries() {
    for (const Token& t : pending_) {
      if (t.kind != TokKind::kName) throw ParseError(t.line, "expected variable name");
      ParsedVar& v = vars_[var_index(t.text, t.line)];
      v.binary = true;
      if (v.ub == std::numeric_limits<double>::infinity()) v.ub = 1.0;
    }
  }

  MilpProblem build(int end_line) {
    MilpProblem p;
    p.reserve(vars_.size(), rows_.size());
    for (const ParsedVar& v : vars_) {
      if (!std::isfinite(v.lb) || !std::isfinite(v.ub)) {
        throw ParseError(end_line, "variable '" + v.name + "' needs finite bounds");
      }
      try {
        p.add_var(v.name, v.binary ? VarKind::kBinary : VarKind::kContinuous, v.lb, v.ub);
      } catch (const InvalidBounds& e) {
        throw ParseError(v.line, e.what());
      }
    }
    for (ParsedRow& r : rows_) {
      p.add_constraint(std::move(r.expr), r.sense, r.rhs, r.name);
    }
    if (maximize_) p.maximize(std::move(objective_));
    else p.set_objective(std::move(objective_));
    return p;
  }

  struct ParsedRow {
    std::string name;
    LinExpr expr;
    Sense sense = Sense::kLessEqual;
    double rhs = 0.0;
    int line = 0;
  };

  std::vector<Token> pending_;
  std::vector<ParsedVar> vars_;
  std::unordered_map<std::string, int> index_;
  std::vector<ParsedRow> rows_;
  LinExpr objective_;
  bool maximize_ = false;
};

}  // namespace

MilpProblem read_lp(std::istream& in) { return LpReader().read(in); }

MilpProblem import_lp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_lp(in);
}

}  // namespace dhcosim::milp
