#pragma once

#include <istream>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dhcosim/core/errors.hpp"

namespace dhcosim::logic {

DHCOSIM_DEFINE_ERROR(InvalidBlock);
DHCOSIM_DEFINE_ERROR(NonFiniteSignal);

class AlgebraicLoop : public Error {
 public:
  explicit AlgebraicLoop(std::vector<std::string> blocks);
  // Blocks on one delay-free cycle, sorted by id.
  const std::vector<std::string>& blocks() const { return blocks_; }

 private:
  std::vector<std::string> blocks_;
};

class LogicParseError : public Error {
 public:
  LogicParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

struct BlockSpec {
  std::string id;
  std::string type;
  std::map<std::string, double> params;
};

struct Connection {
  std::string src_block;
  std::string src_port;
  std::string dst_block;
  std::string dst_port;
};

struct LogicGraph {
  std::vector<BlockSpec> blocks;
  std::vector<Connection> connections;

  LogicGraph& block(std::string id, std::string type, std::map<std::string, double> params = {});
  LogicGraph& connect(const std::string& src, const std::string& dst);  // "blk.port"
};

struct InputDef {
  std::string name;
  double default_value;
};

struct ParamDef {
  std::string name;
  double default_value;
  bool required;
};

struct BlockType {
  std::string name;
  std::vector<InputDef> inputs;
  std::vector<std::string> outputs;
  std::vector<ParamDef> params;
  bool is_delay = false;
};

// Block library lookup; throws InvalidBlock for unknown names.
const BlockType& block_type(const std::string& name);
std::vector<std::string> block_type_names();

// Where a block input takes its value from.
struct Source {
  int block = -1;  // -1 = not connected, use `constant`
  int port = 0;
  double constant = 0.0;
};

struct CompiledBlock {
  std::string id;
  const BlockType* type;
  std::vector<double> params;  // in BlockType::params order
  std::vector<Source> inputs;  // in BlockType::inputs order
};

// Immutable result of compile(); shareable between module instances.
struct ExecutionPlan {
  std::vector<CompiledBlock> blocks;  // sorted by id
  std::vector<int> order;             // task sequence, indices into blocks
  std::vector<int> delays;            // indices of delay blocks
  std::vector<int> external_inputs;   // `input` blocks
  std::vector<int> external_outputs;  // `output` blocks

  int index_of(const std::string& id) const;  // -1 when absent
  std::vector<std::string> order_ids() const;
};

ExecutionPlan compile(const LogicGraph& graph);

// Per-instance mutable state of a plan.
class LogicState {
 public:
  explicit LogicState(const ExecutionPlan& plan);
  void reset();

  double output(const std::string& block, const std::string& port = "y") const;
  double output(int block, int port) const { return out_[block][port]; }

 private:
  friend std::map<std::string, double> step(const ExecutionPlan&, LogicState&,
                                            const std::map<std::string, double>&, double, double);
  const ExecutionPlan* plan_;
  std::vector<std::vector<double>> out_;
  std::vector<std::vector<double>> mem_;
  std::vector<char> primed_;
};

// Executes one step. `inputs` is keyed by `input` block id; missing keys use
// the block's default. Returns the values of all `output` blocks.
std::map<std::string, double> step(const ExecutionPlan& plan, LogicState& state,
                                   const std::map<std::string, double>& inputs, double t,
                                   double dt);

// Text format, one statement per line:
//   block <id> <type> [key=value ...]
//   <src>.<port> -> <dst>.<port>
// '#' starts a comment.
LogicGraph parse_logic(std::istream& in);
LogicGraph parse_logic_string(const std::string& text);
LogicGraph read_logic_file(const std::filesystem::path& path);

}  // namespace dhcosim::logic
