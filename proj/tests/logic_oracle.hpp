#pragma once

// Random block graphs with planted cycles, and an independent reachability
// check for "does a cycle avoid every delay block".

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "dhcosim/logic/logic.hpp"

namespace oracle {

struct RandomGraph {
  dhcosim::logic::LogicGraph graph;
  std::vector<std::string> ids;
  std::vector<bool> is_delay;
  // adj[i][j]: an arc i -> j exists.
  std::vector<std::vector<bool>> adj;
};

inline std::string block_name(int i) {
  // Zero-padded so lexicographic order equals numeric order.
  std::string s = std::to_string(i);
  return "b" + std::string(3 - s.size(), '0') + s;
}

// Blocks are sums (4 inputs) or delays (1 input). A random DAG is built in a
// shuffled order, then `planted` back arcs close cycles.
inline RandomGraph random_logic_graph(std::mt19937_64& rng, int n, double delay_prob,
                                      int planted) {
  RandomGraph g;
  std::bernoulli_distribution is_delay(delay_prob);
  for (int i = 0; i < n; ++i) {
    g.ids.push_back(block_name(i));
    g.is_delay.push_back(is_delay(rng));
    g.graph.block(g.ids.back(), g.is_delay.back() ? "delay" : "sum");
  }
  g.adj.assign(n, std::vector<bool>(n, false));
  std::vector<int> topo(n);
  for (int i = 0; i < n; ++i) topo[i] = i;
  std::shuffle(topo.begin(), topo.end(), rng);

  std::vector<int> free_ports(n);
  for (int i = 0; i < n; ++i) free_ports[i] = g.is_delay[i] ? 1 : 4;
  const char* port_names[] = {"a", "b", "c", "d"};
  auto add_arc = [&](int src, int dst) {
    if (free_ports[dst] == 0 || g.adj[src][dst]) return;
    const int used = (g.is_delay[dst] ? 1 : 4) - free_ports[dst];
    const std::string port = g.is_delay[dst] ? "u" : port_names[used];
    g.graph.connect(g.ids[src] + ".y", g.ids[dst] + "." + port);
    g.adj[src][dst] = true;
    --free_ports[dst];
  };
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int e = 0; e < 2 * n; ++e) {
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    // Forward in the hidden order keeps this part acyclic.
    int pa = std::find(topo.begin(), topo.end(), a) - topo.begin();
    int pb = std::find(topo.begin(), topo.end(), b) - topo.begin();
    if (pa > pb) std::swap(a, b);
    add_arc(a, b);
  }
  for (int k = 0; k < planted; ++k) {
    const int a = pick(rng), b = pick(rng);
    add_arc(a, b);  // may point backwards, closing a cycle
  }
  return g;
}

// True when some directed cycle uses no arc leaving a delay block, i.e. the
// cycle contains no delay at all.
inline bool has_delay_free_cycle(const RandomGraph& g) {
  const int n = static_cast<int>(g.ids.size());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) reach[i][j] = g.adj[i][j] && !g.is_delay[i];
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (int j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (reach[i][i]) return true;
  }
  return false;
}

}  // namespace oracle
