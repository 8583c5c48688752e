#include <random>

#include "doctest.h"
#include "dhcosim/engine/engine.hpp"
#include "dhcosim/logic/logic.hpp"
#include "dhcosim/logic/logic_module.hpp"
#include "logic_oracle.hpp"

using namespace dhcosim;
using namespace dhcosim::logic;

namespace {

std::vector<double> run_trace(const ExecutionPlan& plan, const std::string& input,
                              const std::vector<double>& values, const std::string& probe,
                              double dt = 1.0) {
  LogicState st(plan);
  std::vector<double> out;
  for (double v : values) {
    step(plan, st, {{input, v}}, 0.0, dt);
    out.push_back(st.output(probe));
  }
  return out;
}

}  // namespace

TEST_CASE("delay breaks a cycle") {
  LogicGraph g;
  g.block("A", "sum").block("B", "delay");
  g.connect("A.y", "B.u").connect("B.y", "A.a");
  auto plan = compile(g);
  CHECK(plan.order_ids() == std::vector<std::string>{"A", "B"});
}

TEST_CASE("delay-free cycle is an algebraic loop") {
  LogicGraph g;
  g.block("A", "sum").block("B", "gain", {{"k", 1}});
  g.connect("A.y", "B.u").connect("B.y", "A.a");
  try {
    compile(g);
    FAIL("expected AlgebraicLoop");
  } catch (const AlgebraicLoop& e) {
    CHECK(e.blocks() == std::vector<std::string>{"A", "B"});
  }
}

TEST_CASE("chain compiles in path order with id tie-breaks") {
  LogicGraph g;
  g.block("C", "gain", {{"k", 1}}).block("A", "const", {{"value", 1}}).block("B", "gain", {{"k", 2}});
  g.connect("A.y", "B.u").connect("B.y", "C.u");
  CHECK(compile(g).order_ids() == std::vector<std::string>{"A", "B", "C"});

  LogicGraph h;
  h.block("z", "const", {{"value", 1}}).block("m", "const", {{"value", 1}}).block("a", "sum");
  h.connect("z.y", "a.a").connect("m.y", "a.b");
  CHECK(compile(h).order_ids() == std::vector<std::string>{"m", "z", "a"});
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "warp")), InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "gain")), InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "filter", {{"tau", 0}})), InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "gain", {{"k", 1}, {"q", 2}})), InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "sum").block("x", "sum")), InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("x", "sum").block("y", "sum").connect("x.y", "y.q")),
                  InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph()
                              .block("x", "sum")
                              .block("w", "sum")
                              .block("y", "sum")
                              .connect("x.y", "y.a")
                              .connect("w.y", "y.a")),
                  InvalidBlock);
  CHECK_THROWS_AS(compile(LogicGraph().block("h", "hysteresis", {{"on", 0.2}, {"off", 0.8}})),
                  InvalidBlock);
}

TEST_CASE("unit delay trace") {
  auto plan = compile(parse_logic_string(
      "block in input\n"
      "block d delay init=0\n"
      "in.y -> d.u\n"));
  CHECK(run_trace(plan, "in", {1, 2, 3}, "d") == std::vector<double>{0, 1, 2});
}

TEST_CASE("pure proportional PID") {
  auto plan = compile(parse_logic_string(
      "block e input\n"
      "block zero const value=0\n"
      "block pid pid kp=2\n"
      "e.y -> pid.sp\n"
      "zero.y -> pid.pv\n"));
  CHECK(run_trace(plan, "e", {0, 1, 1, 1, 1}, "pid") == std::vector<double>{0, 2, 2, 2, 2});
}

TEST_CASE("PID with Ki=Kd=0 is memoryless") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const double kp = u(rng);
    LogicGraph g;
    g.block("sp", "input").block("pv", "input").block("c", "pid", {{"kp", kp}, {"min", -20}, {"max", 20}});
    g.connect("sp.y", "c.sp").connect("pv.y", "c.pv");
    auto plan = compile(g);
    LogicState st(plan);
    for (int k = 0; k < 40; ++k) {
      const double a = u(rng), b = u(rng);
      step(plan, st, {{"sp", a}, {"pv", b}}, 0, 0.5 + k % 3);
      CHECK(st.output("c") == std::clamp(kp * (a - b), -20.0, 20.0));
    }
  }
}

TEST_CASE("PID integral with clamping anti-windup") {
  auto plan = compile(parse_logic_string(
      "block sp input\nblock pv input\n"
      "block c pid kp=0 ki=1 max=3\n"
      "sp.y -> c.sp\npv.y -> c.pv\n"));
  LogicState st(plan);
  std::vector<double> y;
  for (int k = 0; k < 6; ++k) {
    step(plan, st, {{"sp", 1.0}, {"pv", 0.0}}, 0, 1.0);
    y.push_back(st.output("c"));
  }
  CHECK(y == std::vector<double>{1, 2, 3, 3, 3, 3});
  // Without windup the output leaves the limit as soon as the error reverses.
  step(plan, st, {{"sp", 0.0}, {"pv", 1.0}}, 0, 1.0);
  CHECK(st.output("c") == 2.0);
}

TEST_CASE("PID derivative starts at zero") {
  auto plan = compile(parse_logic_string(
      "block sp input\nblock c pid kd=2\nsp.y -> c.sp\n"));
  CHECK(run_trace(plan, "sp", {5, 5, 7, 7}, "c", 2.0) == std::vector<double>{0, 0, 2, 0});
}

TEST_CASE("hysteresis relay over a ramp") {
  auto plan = compile(parse_logic_string(
      "block u input\nblock h hysteresis on=0.8 off=0.2\nu.y -> h.u\n"));
  std::vector<double> ramp, expected;
  bool on = false;
  for (int k = 0; k <= 20; ++k) ramp.push_back(k / 10.0 <= 1.0 ? k / 10.0 : 2.0 - k / 10.0);
  for (int k = 0; k <= 10; ++k) ramp[10 + k] = 1.0 - k / 10.0;
  for (double v : ramp) {
    if (!on && v >= 0.8) on = true;
    else if (on && v <= 0.2) on = false;
    expected.push_back(on ? 1.0 : 0.0);
  }
  CHECK(run_trace(plan, "u", ramp, "h") == expected);
  int switches = 0;
  for (std::size_t k = 1; k < expected.size(); ++k) switches += expected[k] != expected[k - 1];
  CHECK(switches == 2);
}

TEST_CASE("filter, saturation, switch, timer, latch") {
  auto filt = compile(parse_logic_string("block u input\nblock f filter tau=1\nu.y -> f.u\n"));
  const std::vector<double> uin{1, 3, -2, 4};
  std::vector<double> expected;
  double prev = 0.0;
  for (double v : uin) {
    prev = (prev + v) / 2.0;
    expected.push_back(prev);
  }
  CHECK(run_trace(filt, "u", uin, "f") == expected);

  auto sat = compile(parse_logic_string("block u input\nblock s saturation min=0 max=1\nu.y -> s.u\n"));
  CHECK(run_trace(sat, "u", {2, -1, 0.5}, "s") == std::vector<double>{1, 0, 0.5});

  auto sw = compile(parse_logic_string(
      "block c input\nblock a const value=4\nblock b const value=9\nblock s switch\n"
      "c.y -> s.cond\na.y -> s.a\nb.y -> s.b\n"));
  CHECK(run_trace(sw, "c", {1, 0}, "s") == std::vector<double>{4, 9});

  auto tm = compile(parse_logic_string("block u input\nblock t timer delay=3\nu.y -> t.u\n"));
  CHECK(run_trace(tm, "u", {1, 1, 1, 1, 0, 1}, "t") == std::vector<double>{0, 0, 1, 1, 0, 0});

  auto la = compile(parse_logic_string(
      "block s input\nblock r input default=0\nblock l latch\ns.y -> l.s\nr.y -> l.r\n"));
  CHECK(run_trace(la, "s", {0, 1, 0, 0}, "l") == std::vector<double>{0, 1, 1, 1});
}

TEST_CASE("non-finite signals are reported") {
  auto plan = compile(parse_logic_string("block u input\nblock g gain k=2\nu.y -> g.u\n"));
  LogicState st(plan);
  CHECK_THROWS_AS(step(plan, st, {{"u", std::numeric_limits<double>::infinity()}}, 0, 1),
                  NonFiniteSignal);
}

TEST_CASE("parser reports line numbers") {
  try {
    parse_logic_string("block a const value=1\n\nblock b gain k=abc\n");
    FAIL("expected parse error");
  } catch (const LogicParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_logic_string("wire a b\n"), LogicParseError);
  CHECK_THROWS_AS(parse_logic_string("a.y -> \n"), LogicParseError);
}

TEST_CASE("planted cycles compile iff every cycle has a delay") {
  std::mt19937_64 rng(314);
  int loops = 0, ok = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> n_dist(2, 14), planted(0, 4);
    auto g = oracle::random_logic_graph(rng, n_dist(rng), 0.25, planted(rng));
    const bool expect_loop = oracle::has_delay_free_cycle(g);
    try {
      auto plan = compile(g.graph);
      CHECK_FALSE(expect_loop);
      ++ok;
      // Every non-delay producer precedes its consumer.
      std::vector<int> pos(plan.blocks.size());
      for (std::size_t k = 0; k < plan.order.size(); ++k) pos[plan.order[k]] = static_cast<int>(k);
      for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
        for (const Source& s : plan.blocks[i].inputs) {
          if (s.block >= 0 && !plan.blocks[s.block].type->is_delay) CHECK(pos[s.block] < pos[i]);
        }
      }
      CHECK(compile(g.graph).order == plan.order);
    } catch (const AlgebraicLoop& e) {
      CHECK(expect_loop);
      ++loops;
      // The reported blocks lie on a delay-free cycle.
      for (const auto& id : e.blocks()) {
        const int i = std::find(g.ids.begin(), g.ids.end(), id) - g.ids.begin();
        CHECK_FALSE(g.is_delay[i]);
      }
    }
  }
  CHECK(loops > 20);
  CHECK(ok > 20);
}

TEST_CASE("logic model as a co-simulation module") {
  auto plan = std::make_shared<const ExecutionPlan>(compile(parse_logic_string(
      "block level input default=0.5\n"
      "block relay hysteresis on=0.8 off=0.2\n"
      "block cmd output\n"
      "level.y -> relay.u\n"
      "relay.y -> cmd.u\n")));
  engine::Simulation sim;
  sim.base_period = 1;
  sim.duration = 3;
  sim.modules["rbc"] = [plan] { return std::make_unique<LogicModule>("rbc", plan); };
  sim.sequences = {{"ctl", 1, {"rbc"}}};
  auto r = engine::run(sim);
  CHECK(r.at("rbc.cmd").values == std::vector<double>{0, 0, 0});
}
