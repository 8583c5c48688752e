#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "blocks.hpp"

namespace dhcosim::logic {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  const auto dot = ref.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw InvalidBlock(fmt::format("'{}' is not of the form block.port", ref));
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

int find_index(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

}  // namespace

AlgebraicLoop::AlgebraicLoop(std::vector<std::string> blocks)
    : Error("AlgebraicLoop", fmt::format("algebraic loop without a delay block: {{{}}}",
                                         join(blocks))),
      blocks_(std::move(blocks)) {}

LogicParseError::LogicParseError(int line, const std::string& what)
    : Error("LogicParseError", fmt::format("line {}: {}", line, what)), line_(line) {}

LogicGraph& LogicGraph::block(std::string id, std::string type,
                              std::map<std::string, double> params) {
  blocks.push_back({std::move(id), std::move(type), std::move(params)});
  return *this;
}

LogicGraph& LogicGraph::connect(const std::string& src, const std::string& dst) {
  auto [sb, sp] = split_ref(src);
  auto [db, dp] = split_ref(dst);
  connections.push_back({sb, sp, db, dp});
  return *this;
}

int ExecutionPlan::index_of(const std::string& id) const {
  auto it = std::lower_bound(blocks.begin(), blocks.end(), id,
                             [](const CompiledBlock& b, const std::string& v) { return b.id < v; });
  return it != blocks.end() && it->id == id ? static_cast<int>(it - blocks.begin()) : -1;
}

std::vector<std::string> ExecutionPlan::order_ids() const {
  std::vector<std::string> ids;
  for (int i : order) ids.push_back(blocks[i].id);
  return ids;
}

ExecutionPlan compile(const LogicGraph& graph) {
  ExecutionPlan plan;

  std::vector<const BlockSpec*> specs;
  for (const BlockSpec& b : graph.blocks) specs.push_back(&b);
  std::sort(specs.begin(), specs.end(),
            [](const BlockSpec* a, const BlockSpec* b) { return a->id < b->id; });
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const BlockSpec& s = *specs[i];
    if (s.id.empty() || s.id.find('.') != std::string::npos) {
      throw InvalidBlock(fmt::format("invalid block id '{}'", s.id));
    }
    if (i > 0 && specs[i - 1]->id == s.id) {
      throw InvalidBlock(fmt::format("duplicate block id '{}'", s.id));
    }
    CompiledBlock cb;
    cb.id = s.id;
    cb.type = &block_type(s.type);
    for (const auto& [key, value] : s.params) {
      const bool known = std::any_of(cb.type->params.begin(), cb.type->params.end(),
                                     [&](const ParamDef& d) { return d.name == key; });
      if (!known) {
        throw InvalidBlock(
            fmt::format("block '{}' ({}) has no parameter '{}'", s.id, s.type, key));
      }
    }
    for (const ParamDef& d : cb.type->params) {
      auto it = s.params.find(d.name);
      if (it == s.params.end() && d.required) {
        throw InvalidBlock(
            fmt::format("block '{}' ({}) requires parameter '{}'", s.id, s.type, d.name));
      }
      cb.params.push_back(it == s.params.end() ? d.default_value : it->second);
    }
    for (const InputDef& in : cb.type->inputs) cb.inputs.push_back({-1, 0, in.default_value});
    validate_params(cb);
    plan.blocks.push_back(std::move(cb));
  }

  const int n = static_cast<int>(plan.blocks.size());
  std::vector<std::vector<int>> succ(n), pred(n);
  for (const Connection& c : graph.connections) {
    const int src = plan.index_of(c.src_block);
    const int dst = plan.index_of(c.dst_block);
    if (src < 0) throw InvalidBlock(fmt::format("connection from unknown block '{}'", c.src_block));
    if (dst < 0) throw InvalidBlock(fmt::format("connection to unknown block '{}'", c.dst_block));
    CompiledBlock& d = plan.blocks[dst];
    const BlockType& st = *plan.blocks[src].type;
    const int sp = find_index(st.outputs, c.src_port);
    if (sp < 0) {
      throw InvalidBlock(fmt::format("block '{}' ({}) has no output '{}'", c.src_block, st.name,
                                     c.src_port));
    }
    int dp = -1;
    for (std::size_t k = 0; k < d.type->inputs.size(); ++k) {
      if (d.type->inputs[k].name == c.dst_port) dp = static_cast<int>(k);
    }
    if (dp < 0) {
      throw InvalidBlock(fmt::format("block '{}' ({}) has no input '{}'", c.dst_block,
                                     d.type->name, c.dst_port));
    }
    if (d.inputs[dp].block >= 0) {
      throw InvalidBlock(fmt::format("input '{}.{}' has more than one incoming connection",
                                     c.dst_block, c.dst_port));
    }
    d.inputs[dp] = {src, sp, 0.0};
    // Arcs leaving a delay carry last step's value and impose no ordering.
    if (!st.is_delay) {
      succ[src].push_back(dst);
      pred[dst].push_back(src);
    }
  }

  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(pred[v].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    plan.order.push_back(v);
    for (int w : succ[v]) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }

  if (static_cast<int>(plan.order.size()) < n) {
    // Every leftover block still has a leftover predecessor, so walking
    // predecessors must revisit a block; the revisited stretch is a cycle.
    std::vector<int> pos(n, -1);
    std::vector<int> walk;
    int v = 0;
    while (indeg[v] == 0) ++v;
    while (pos[v] < 0) {
      pos[v] = static_cast<int>(walk.size());
      walk.push_back(v);
      for (int u : pred[v]) {
        if (indeg[u] > 0) {
          v = u;
          break;
        }
      }
    }
    std::vector<std::string> cycle;
    for (std::size_t k = pos[v]; k < walk.size(); ++k) cycle.push_back(plan.blocks[walk[k]].id);
    std::sort(cycle.begin(), cycle.end());
    throw AlgebraicLoop(std::move(cycle));
  }

  for (int i = 0; i < n; ++i) {
    const std::string& type = plan.blocks[i].type->name;
    if (plan.blocks[i].type->is_delay) plan.delays.push_back(i);
    if (type == "input") plan.external_inputs.push_back(i);
    if (type == "output") plan.external_outputs.push_back(i);
  }
  return plan;
}

LogicState::LogicState(const ExecutionPlan& plan) : plan_(&plan) { reset(); }

void LogicState::reset() {
  const auto& blocks = plan_->blocks;
  out_.assign(blocks.size(), {});
  mem_.assign(blocks.size(), {});
  primed_.assign(blocks.size(), 0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out_[i].assign(blocks[i].type->outputs.size(), 0.0);
    mem_[i] = initial_memory(blocks[i]);
  }
}

double LogicState::output(const std::string& block, const std::string& port) const {
  const int i = plan_->index_of(block);
  if (i < 0) throw InvalidBlock(fmt::format("unknown block '{}'", block));
  const int p = find_index(plan_->blocks[i].type->outputs, port);
  if (p < 0) throw InvalidBlock(fmt::format("block '{}' has no output '{}'", block, port));
  return out_[i][p];
}

std::map<std::string, double> step(const ExecutionPlan& plan, LogicState& state,
                                   const std::map<std::string, double>& inputs, double /*t*/,
                                   double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("logic step requires dt > 0");
  for (const auto& [name, value] : inputs) {
    const int i = plan.index_of(name);
    if (i < 0 || plan.blocks[i].type->name != "input") {
      throw InvalidBlock(fmt::format("'{}' is not an input block", name));
    }
    (void)value;
  }
  auto check = [&](int i) {
    for (double v : state.out_[i]) {
      if (!std::isfinite(v)) {
        throw NonFiniteSignal(fmt::format("block '{}' produced a non-finite value", plan.blocks[i].id));
      }
    }
  };

  // Delays publish last step's input before anything reads them.
  for (int i : plan.delays) {
    state.out_[i][0] = state.mem_[i][0];
    check(i);
  }
  double in_buf[8];
  for (int i : plan.order) {
    const CompiledBlock& b = plan.blocks[i];
    for (std::size_t k = 0; k < b.inputs.size(); ++k) {
      const Source& s = b.inputs[k];
      in_buf[k] = s.block < 0 ? s.constant : state.out_[s.block][s.port];
    }
    if (b.type->is_delay) {
      state.mem_[i][0] = in_buf[0];
      continue;
    }
    if (b.type->name == "input") {
      auto it = inputs.find(b.id);
      state.out_[i][0] = it == inputs.end() ? b.params[0] : it->second;
    } else {
      evaluate(b, in_buf, state.out_[i].data(), state.mem_[i], state.primed_[i], dt);
    }
    check(i);
  }

  std::map<std::string, double> out;
  for (int i : plan.external_outputs) out[plan.blocks[i].id] = state.out_[i][0];
  return out;
}

}  // namespace dhcosim::logic
