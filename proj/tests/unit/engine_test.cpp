#include <random>

#include "doctest.h"
#include "dhcosim/engine/engine.hpp"
#include "dhcosim/engine/lag_module.hpp"
#include "two_lag_oracle.hpp"

using namespace dhcosim;
using namespace dhcosim::engine;

namespace {

class Constant final : public SimModule {
 public:
  Constant(std::string id, double v) : SimModule(std::move(id), {}, {{"y"}}), v_(v) {}

 protected:
  void on_step(Seconds, Seconds) override { output("y", v_); }

 private:
  double v_;
};

class Doubler final : public SimModule {
 public:
  explicit Doubler(std::string id) : SimModule(std::move(id), {{"u"}}, {{"y"}}) {}

 protected:
  void on_step(Seconds, Seconds) override { output("y", 2.0 * input("u")); }
};

// Emits the tick time plus a seeded random value, and counts its callbacks.
class Noisy final : public SimModule {
 public:
  Noisy(std::string id, unsigned seed, int* inits, int* terms)
      : SimModule(std::move(id), {{"u"}}, {{"y"}}), rng_(seed), inits_(inits), terms_(terms) {}

 protected:
  void on_initialize(Seconds) override { ++*inits_; }
  void on_step(Seconds t, Seconds dt) override {
    std::uniform_real_distribution<double> d(0, 1);
    acc_ += input("u") * 0.5 + d(rng_) + static_cast<double>(t % 97) + static_cast<double>(dt);
    output("y", acc_);
  }
  void on_terminate() override { ++*terms_; }

 private:
  std::mt19937_64 rng_;
  double acc_ = 0.0;
  int* inits_;
  int* terms_;
};

class Bad final : public SimModule {
 public:
  explicit Bad(std::string id) : SimModule(std::move(id), {}, {{"y"}, {"z"}}) {}
  int fail_at = 3;

 protected:
  void on_step(Seconds, Seconds) override {
    output("y", current_tick() == fail_at ? std::nan("") : 1.0);
  }
};

template <class M, class... A>
ModuleFactory make(A... args) {
  return [=] { return std::make_unique<M>(args...); };
}

}  // namespace

TEST_CASE("lifecycle contract") {
  ExchangeZone zone;
  Constant c("c", 1.0);
  c.attach(&zone, {});
  CHECK_THROWS_AS(c.do_step(0, 0, 1), LifecycleViolation);
  c.initialize(0);
  CHECK_THROWS_AS(c.initialize(0), LifecycleViolation);
  c.do_step(4, 0, 1);
  CHECK(zone.read("c.y").last_write_tick == 4);
  c.terminate();
  CHECK_THROWS_AS(c.terminate(), LifecycleViolation);
  CHECK_THROWS_AS(c.do_step(5, 0, 1), LifecycleViolation);
}

TEST_CASE("undeclared ports are rejected") {
  ExchangeZone zone;
  Doubler d("d");
  CHECK_THROWS_AS(d.attach(&zone, {{"nope", "x.y"}}), UndeclaredPort);
}

TEST_CASE("build_schedule") {
  auto plan = build_schedule({{"A", 1, {"a"}}, {"B", 5, {"b"}}}, 10);
  int b_fires = 0;
  for (const auto& f : plan) {
    if (std::find(f.sequences.begin(), f.sequences.end(), "B") != f.sequences.end()) {
      CHECK((f.tick == 0 || f.tick == 5));
      ++b_fires;
    }
    CHECK(f.sequences.front() == "A");
  }
  CHECK(b_fires == 2);
  CHECK(build_schedule({{"S", 1, {"a"}}}, 7).size() == 7);
  CHECK_THROWS_AS(build_schedule({{"A", 1, {"a"}}, {"B", 2, {"a"}}}, 3),
                  DuplicateModuleAssignment);
  CHECK_THROWS_AS(build_schedule({{"A", 0, {"a"}}}, 3), InvalidArgument);
}

TEST_CASE("schedule fires exactly at multiples") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> mult(1, 12), count(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SequenceSpec> seqs;
    const int n = count(rng);
    for (int s = 0; s < n; ++s) {
      seqs.push_back({"s" + std::to_string(s), mult(rng), {"m" + std::to_string(s)}});
    }
    const Tick ticks = 60;
    auto plan = build_schedule(seqs, ticks);
    std::map<Tick, std::vector<std::string>> fired;
    for (auto& f : plan) fired[f.tick] = f.sequences;
    for (Tick t = 0; t < ticks; ++t) {
      std::vector<std::string> expected;
      for (auto& s : seqs) {
        if (t % s.multiplier == 0) expected.push_back(s.name);
      }
      CHECK(fired[t] == expected);
    }
  }
}

TEST_CASE("sequential coupling within a tick") {
  Simulation sim;
  sim.base_period = 1;
  sim.duration = 5;
  sim.modules["a"] = make<Constant>(std::string("a"), 1.0);
  sim.modules["b"] = make<Doubler>(std::string("b"));
  sim.wiring["b.u"] = "a.y";

  sim.sequences = {{"main", 1, {"a", "b"}}};
  auto r = run(sim);
  CHECK(r.at("b.y").values == std::vector<double>{2, 2, 2, 2, 2});

  sim.sequences = {{"main", 1, {"b", "a"}}};
  r = run(sim);
  CHECK(r.at("b.y").values == std::vector<double>{0, 2, 2, 2, 2});
}

TEST_CASE("two-second base period over a 15-minute transient") {
  Simulation sim;
  sim.base_period = 2;
  sim.duration = 15 * 60;
  sim.modules["a"] = make<Constant>(std::string("a"), 1.0);
  sim.sequences = {{"main", 1, {"a"}}};
  auto r = run(sim);
  CHECK(r.ticks == 450);
  CHECK(r.at("a.y").times.size() == 450);
  CHECK(r.at("a.y").times.back() == 898);
}

TEST_CASE("single writer, lifecycle counts and bit-identical reruns") {
  int inits = 0, terms = 0;
  Simulation sim;
  sim.base_period = 60;
  sim.duration = 60 * 200;
  sim.modules["n1"] = make<Noisy>(std::string("n1"), 1u, &inits, &terms);
  sim.modules["n2"] = make<Noisy>(std::string("n2"), 2u, &inits, &terms);
  sim.modules["n3"] = make<Noisy>(std::string("n3"), 3u, &inits, &terms);
  sim.wiring["n2.u"] = "n1.y";
  sim.wiring["n1.u"] = "n3.y";
  sim.sequences = {{"fast", 1, {"n1", "n2"}}, {"slow", 7, {"n3"}}};
  auto a = run(sim);
  auto b = run(sim);
  CHECK(a == b);
  CHECK(inits == 6);
  CHECK(terms == 6);
  CHECK(a.at("n3.y").times.size() == 29);

  sim.parallel = true;
  auto c = run(sim);
  CHECK(c == a);
}

TEST_CASE("parallel dispatch matches sequential execution") {
  int inits = 0, terms = 0;
  Simulation sim;
  sim.base_period = 1;
  sim.duration = 300;
  for (int k = 0; k < 6; ++k) {
    const std::string id = "m" + std::to_string(k);
    sim.modules[id] = make<Noisy>(id, static_cast<unsigned>(k + 10), &inits, &terms);
  }
  sim.wiring["m1.u"] = "m0.y";
  sim.wiring["m0.u"] = "m1.y";
  sim.wiring["m4.u"] = "m5.y";
  sim.sequences = {{"a", 1, {"m0", "m1", "m2"}}, {"b", 2, {"m3", "m4"}}, {"c", 3, {"m5"}}};
  auto seq = run(sim);
  sim.parallel = true;
  CHECK(run(sim) == seq);
}

TEST_CASE("non-finite writes abort with context") {
  Simulation sim;
  sim.base_period = 1;
  sim.duration = 10;
  sim.modules["bad"] = make<Bad>(std::string("bad"));
  sim.sequences = {{"s", 1, {"bad"}}};
  try {
    run(sim);
    FAIL("expected failure");
  } catch (const ModuleStepFailure& e) {
    CHECK(e.module() == "bad");
    CHECK(e.tick() == 3);
    CHECK(e.inner_code() == "NonFiniteValue");
    CHECK(std::string(e.what()).find("bad.y") != std::string::npos);
  }
}

TEST_CASE("wiring validation names the missing slot") {
  Simulation sim;
  sim.base_period = 1;
  sim.duration = 2;
  sim.modules["b"] = make<Doubler>(std::string("b"));
  sim.sequences = {{"s", 1, {"b"}}};
  sim.wiring["b.u"] = "ghost.y";
  try {
    validate_simulation(sim);
    FAIL("expected WiringError");
  } catch (const WiringError& e) {
    CHECK(std::string(e.what()).find("ghost.y") != std::string::npos);
  }
  sim.wiring.clear();
  sim.sequences = {};
  CHECK_THROWS_AS(validate_simulation(sim), InvalidArgument);
}

namespace {

Simulation two_lag_sim(const oracle::TwoLag& s, Seconds duration) {
  Simulation sim;
  sim.base_period = 1;
  sim.duration = duration;
  sim.modules["x1"] = [s] {
    return std::make_unique<LagModule>("x1", LagParams{s.tau1, s.g1, s.b1, s.x1_0});
  };
  sim.modules["x2"] = [s] {
    return std::make_unique<LagModule>("x2", LagParams{s.tau2, s.g2, s.b2, s.x2_0});
  };
  sim.wiring["x1.u"] = "x2.y";
  sim.wiring["x2.u"] = "x1.y";
  sim.sequences = {{"plant", 1, {"x1", "x2"}}};
  return sim;
}

}  // namespace

TEST_CASE("convergence study on two coupled lags") {
  const oracle::TwoLag sys{60.0, -0.1, 1.0, 0.0, 120.0, 1.0, 0.0, 0.0};
  const Seconds duration = 640;
  auto sim = two_lag_sim(sys, duration);
  auto report = convergence_study(sim, {16, 8, 4, 2, 1}, {"x1.y", "x2.y"});
  const auto exact = oracle::two_lag_exact(sys, static_cast<double>(duration));
  double prev = 1e9;
  for (const auto& row : report.rows) {
    const double err = std::abs(row.final_values.at("x1.y") - exact.x1) +
                       std::abs(row.final_values.at("x2.y") - exact.x2);
    CHECK(err < prev);
    prev = err;
  }
  const auto& d = report.differences.at("x2.y");
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);

  auto same = convergence_study(sim, {4, 4}, {"x1.y"});
  CHECK(same.differences.at("x1.y")[0] == 0.0);
  CHECK_THROWS_AS(convergence_study(sim, {1}, {"nope.y"}), UnknownSlot);
  CHECK_THROWS_AS(convergence_study(sim, {3}, {"x1.y"}), InvalidArgument);
}
