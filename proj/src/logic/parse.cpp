#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dhcosim/logic/logic.hpp"

namespace dhcosim::logic {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, int line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (text.empty() || end != begin + text.size()) {
    throw LogicParseError(line, fmt::format("'{}' is not a number", text));
  }
  return v;
}

std::pair<std::string, std::string> parse_ref(const std::string& ref, int line) {
  const auto dot = ref.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw LogicParseError(line, fmt::format("expected block.port, got '{}'", ref));
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

}  // namespace

LogicGraph parse_logic(std::istream& in) {
  LogicGraph g;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;

    if (auto arrow = text.find("->"); arrow != std::string::npos) {
      const std::string lhs = trim(text.substr(0, arrow));
      const std::string rhs = trim(text.substr(arrow + 2));
      if (lhs.find_first_of(" \t") != std::string::npos ||
          rhs.find_first_of(" \t") != std::string::npos) {
        throw LogicParseError(line, "a connection takes exactly one source and one target");
      }
      auto [sb, sp] = parse_ref(lhs, line);
      auto [db, dp] = parse_ref(rhs, line);
      g.connections.push_back({sb, sp, db, dp});
      continue;
    }

    std::istringstream words(text);
    std::string keyword, id, type;
    words >> keyword;
    if (keyword != "block") {
      throw LogicParseError(line, fmt::format("unexpected statement '{}'", keyword));
    }
    if (!(words >> id >> type)) throw LogicParseError(line, "expected: block <id> <type> ...");
    BlockSpec spec{id, type, {}};
    std::string kv;
    while (words >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw LogicParseError(line, fmt::format("expected key=value, got '{}'", kv));
      }
      const std::string key = kv.substr(0, eq);
      if (!spec.params.emplace(key, parse_number(kv.substr(eq + 1), line)).second) {
        throw LogicParseError(line, fmt::format("parameter '{}' given twice", key));
      }
    }
    g.blocks.push_back(std::move(spec));
  }
  return g;
}

LogicGraph parse_logic_string(const std::string& text) {
  std::istringstream in(text);
  return parse_logic(in);
}

LogicGraph read_logic_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open logic model '{}'", path.string()));
  return parse_logic(in);
}

}  // namespace dhcosim::logic
