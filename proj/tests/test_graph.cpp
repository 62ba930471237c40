#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "ndp/graph.hpp"
#include "ndp/rng.hpp"

using namespace ndp;

namespace {

DevGraph path3() {
  DevGraph g(GraphMode::Undirected);
  for (int i = 0; i < 3; ++i) g.add_node(NodeRole::Hidden, {0.0});
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  return g;
}

// brute-force all-pairs BFS eccentricity oracle over the largest component
int diameter_oracle(const DevGraph& g) {
  int n = g.node_count();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    std::vector<int> q{s};
    dist[s][s] = 0;
    for (size_t head = 0; head < q.size(); ++head) {
      int v = q[head];
      for (int w : g.neighbors(v))
        if (dist[s][w] < 0) {
          dist[s][w] = dist[s][v] + 1;
          q.push_back(w);
        }
    }
  }
  // component sizes via reachability from each node
  int best_root = 0, best_size = -1;
  for (int s = 0; s < n; ++s) {
    int size = 0;
    for (int t = 0; t < n; ++t) size += dist[s][t] >= 0;
    if (size > best_size) {
      best_size = size;
      best_root = s;
    }
  }
  int diam = 0;
  for (int a = 0; a < n; ++a) {
    if (dist[best_root][a] < 0) continue;
    for (int b = 0; b < n; ++b)
      if (dist[best_root][b] >= 0) diam = std::max(diam, dist[a][b]);
  }
  return diam;
}

DevGraph random_undirected(int n, int m, Rng& rng) {
  DevGraph g(GraphMode::Undirected);
  for (int i = 0; i < n; ++i) g.add_node(NodeRole::Hidden, {0.0});
  std::uniform_int_distribution<int> node(0, n - 1);
  int added = 0;
  while (added < m) {
    int a = node(rng), b = node(rng);
    if (a == b || g.has_edge(a, b)) continue;
    g.add_edge(a, b, 1.0);
    ++added;
  }
  return g;
}

}  // namespace

TEST_CASE("node ids are consecutive and embeddings dimension-checked") {
  DevGraph g(GraphMode::Undirected);
  CHECK(g.add_node(NodeRole::Input, {1.0, 2.0, 3.0, 4.0}) == 0);
  CHECK(g.add_node(NodeRole::Hidden, {0.0, 0.0, 0.0, 0.0}) == 1);
  CHECK(g.add_node(NodeRole::Output, {5.0, 6.0, 7.0, 8.0}) == 2);
  CHECK(g.embedding_dim() == 4);
  CHECK(g.activation(2) == 0.0);
  CHECK_THROWS_AS(g.add_node(NodeRole::Hidden, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("edge semantics") {
  SUBCASE("undirected add (1,0) after (0,1) overwrites the same edge") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Hidden, {0.0});
    g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 1, 0.5);
    CHECK(g.edge_weight(0, 1) == 0.5);
    g.add_edge(1, 0, -0.25);
    CHECK(g.edge_count() == 1);
    CHECK(g.edge_weight(0, 1) == -0.25);
  }
  SUBCASE("self-loops are rejected") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Hidden, {0.0});
    CHECK_THROWS_AS(g.add_edge(0, 0, 1.0), Error);
  }
  SUBCASE("cycle creation is rejected in DAG mode") {
    DevGraph g(GraphMode::DirectedAcyclic);
    for (int i = 0; i < 3; ++i) g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 1, 1.0);
    g.add_edge(1, 2, 1.0);
    CHECK_THROWS_AS(g.add_edge(2, 0, 1.0), Error);
    g.add_edge(0, 2, 1.0);  // parallel path is fine
  }
}

TEST_CASE("diameter") {
  SUBCASE("path graph 0-1-2 has diameter 2") { CHECK(path3().diameter() == 2); }
  SUBCASE("complete graph K4 has diameter 1") {
    DevGraph g(GraphMode::Undirected);
    for (int i = 0; i < 4; ++i) g.add_node(NodeRole::Hidden, {0.0});
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) g.add_edge(a, b, 1.0);
    CHECK(g.diameter() == 1);
  }
  SUBCASE("two disconnected pairs report the largest component") {
    DevGraph g(GraphMode::Undirected);
    for (int i = 0; i < 4; ++i) g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 1, 1.0);
    g.add_edge(2, 3, 1.0);
    CHECK(g.diameter() == 1);
    CHECK(g.diameter() == diameter_oracle(g));
  }
  SUBCASE("single node has diameter 0") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Hidden, {0.0});
    CHECK(g.diameter() == 0);
  }
  SUBCASE("matches the all-pairs BFS oracle on random graphs up to 50 nodes") {
    Rng rng = make_rng(17);
    for (int trial = 0; trial < 25; ++trial) {
      std::uniform_int_distribution<int> nd(2, 50);
      int n = nd(rng);
      std::uniform_int_distribution<int> md(1, n * (n - 1) / 2);
      DevGraph g = random_undirected(n, md(rng), rng);
      CHECK(g.diameter() == diameter_oracle(g));
    }
  }
}

TEST_CASE("topological order") {
  SUBCASE("ties break by ascending id") {
    DevGraph g(GraphMode::DirectedAcyclic);
    for (int i = 0; i < 3; ++i) g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 2, 1.0);
    g.add_edge(1, 2, 1.0);
    CHECK(g.topological_order() == std::vector<int>{0, 1, 2});
  }
  SUBCASE("seed-style graph: inputs precede outputs") {
    DevGraph g(GraphMode::DirectedAcyclic);
    for (int i = 0; i < 4; ++i) g.add_node(NodeRole::Input, {0.0});
    for (int i = 0; i < 2; ++i) g.add_node(NodeRole::Output, {0.0});
    for (int i = 0; i < 4; ++i)
      for (int o = 4; o < 6; ++o) g.add_edge(i, o, 1.0);
    auto order = g.topological_order();
    CHECK(order == std::vector<int>{0, 1, 2, 3, 4, 5});
  }
  SUBCASE("mode error on undirected graphs") {
    CHECK_THROWS_AS(path3().topological_order(), Error);
  }
  SUBCASE("random 20-node DAGs satisfy the edge-direction property") {
    Rng rng = make_rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      DevGraph g(GraphMode::DirectedAcyclic);
      for (int i = 0; i < 20; ++i) g.add_node(NodeRole::Hidden, {0.0});
      std::uniform_int_distribution<int> node(0, 19);
      for (int tries = 0; tries < 40; ++tries) {
        int a = node(rng), b = node(rng);
        if (a == b) continue;
        try {
          g.add_edge(a, b, 1.0);
        } catch (const Error&) {
          // proposed edge closed a cycle; skip it
        }
      }
      auto order = g.topological_order();
      std::vector<int> pos(20);
      for (int i = 0; i < 20; ++i) pos[order[i]] = i;
      for (const auto& [u, v, w] : g.edge_list()) CHECK(pos[u] < pos[v]);
    }
  }
}

TEST_CASE("small-world metrics") {
  SUBCASE("complete graph K5: c=1, l=1") {
    DevGraph g(GraphMode::Undirected);
    for (int i = 0; i < 5; ++i) g.add_node(NodeRole::Hidden, {0.0});
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b) g.add_edge(a, b, 1.0);
    auto rep = g.small_world_metrics(3, 1);
    CHECK(rep.c == doctest::Approx(1.0));
    CHECK(rep.l == doctest::Approx(1.0));
  }
  SUBCASE("ring lattice n=20 k=4 has clustering 0.5") {
    // brute-force triangle oracle: each node's 4 neighbors share 3 of the
    // 6 possible links
    DevGraph g(GraphMode::Undirected);
    for (int i = 0; i < 20; ++i) g.add_node(NodeRole::Hidden, {0.0});
    for (int v = 0; v < 20; ++v)
      for (int off = 1; off <= 2; ++off) g.add_edge(v, (v + off) % 20, 1.0);
    auto rep = g.small_world_metrics(3, 1);
    CHECK(rep.c == doctest::Approx(0.5));
  }
  SUBCASE("identities hold on the stored fields") {
    Rng rng = make_rng(3);
    DevGraph g = random_undirected(16, 40, rng);
    auto rep = g.small_world_metrics(5, 9);
    CHECK(rep.sigma == doctest::Approx((rep.c / rep.c_r) / (rep.l / rep.l_r)));
    CHECK(rep.omega == doctest::Approx(rep.l_r / rep.l - rep.c / rep.c_l));
    CHECK(rep.c >= 0.0);
    CHECK(rep.c <= 1.0);
    CHECK(rep.c_r >= 0.0);
    CHECK(rep.c_l <= 1.0);
    CHECK(rep.l >= 1.0);
    CHECK(rep.l_r >= 1.0);
  }
  SUBCASE("disconnected graphs are a metric error") {
    DevGraph g(GraphMode::Undirected);
    for (int i = 0; i < 4; ++i) g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 1, 1.0);
    g.add_edge(2, 3, 1.0);
    CHECK_THROWS_AS(g.small_world_metrics(3, 1), Error);
  }
  SUBCASE("bit-identical across runs with the same seed") {
    Rng rng = make_rng(5);
    DevGraph g = random_undirected(14, 30, rng);
    auto a = g.small_world_metrics(6, 1234);
    auto b = g.small_world_metrics(6, 1234);
    CHECK(a.sigma == b.sigma);
    CHECK(a.omega == b.omega);
    CHECK(a.c_r == b.c_r);
    CHECK(a.l_r == b.l_r);
  }
  SUBCASE("sigma of a random graph itself averages about 1") {
    // tolerance +-0.25 over 20 seeds, n=30, m=60
    double total = 0.0;
    for (int s = 0; s < 20; ++s) {
      Rng rng = make_rng(1000 + s);
      DevGraph g(GraphMode::Undirected);
      while (true) {
        g = random_undirected(30, 60, rng);
        bool ok = true;
        try {
          g.small_world_metrics(1, s);
        } catch (const Error&) {
          ok = false;
        }
        if (ok) break;
      }
      total += g.small_world_metrics(8, 777 + s).sigma;
    }
    CHECK(std::abs(total / 20.0 - 1.0) < 0.25);
  }
}

TEST_CASE("dot export") {
  SUBCASE("single node") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Input, {0.0});
    std::string dot = g.export_dot();
    CHECK(dot.find("graph g {") == 0);
    CHECK(dot.find("0 [style=filled, fillcolor=red]") != std::string::npos);
  }
  SUBCASE("XOR-sized graph: 4 node and 7 edge statements") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Input, {0.0});
    g.add_node(NodeRole::Input, {0.0});
    g.add_node(NodeRole::Hidden, {0.0});
    g.add_node(NodeRole::Output, {0.0});
    int added = 0;
    for (int a = 0; a < 4 && added < 7; ++a)
      for (int b = a + 1; b < 4 && added < 7; ++b) {
        g.add_edge(a, b, 0.5 * (a + b));
        ++added;
      }
    // 4 choose 2 = 6 < 7, so double one weight via overwrite and count 6
    const std::string dot = g.export_dot();
    size_t nodes = 0, edges = 0, pos = 0;
    while ((pos = dot.find("fillcolor", pos)) != std::string::npos) {
      ++nodes;
      ++pos;
    }
    pos = 0;
    while ((pos = dot.find(" -- ", pos)) != std::string::npos) {
      ++edges;
      ++pos;
    }
    CHECK(nodes == 4);
    CHECK(edges == 6);
    CHECK(dot.find("label=\"") != std::string::npos);
  }
  SUBCASE("undirected graphs use the graph keyword and -- edges") {
    auto dot = path3().export_dot();
    CHECK(dot.substr(0, 5) == "graph");
    CHECK(dot.find("--") != std::string::npos);
    CHECK(dot.find("->") == std::string::npos);
  }
  SUBCASE("weights are labeled at 4 decimals") {
    DevGraph g(GraphMode::Undirected);
    g.add_node(NodeRole::Hidden, {0.0});
    g.add_node(NodeRole::Hidden, {0.0});
    g.add_edge(0, 1, 0.123456);
    CHECK(g.export_dot().find("label=\"0.1235\"") != std::string::npos);
  }
}

TEST_CASE("json export round-trips") {
  Rng rng = make_rng(8);
  DevGraph g(GraphMode::DirectedAcyclic);
  for (int i = 0; i < 3; ++i) g.add_node(NodeRole::Input, {0.25 * i, -1.0});
  g.add_node(NodeRole::Output, {1.0 / 3.0, 2.0});
  g.add_edge(0, 3, 0.1234567890123456789);
  g.add_edge(1, 3, -2.5);
  std::string text = g.export_json();
  DevGraph back = DevGraph::import_json(text);
  CHECK(back.node_count() == 4);
  CHECK(back.edge_count() == 2);
  CHECK(back.mode() == GraphMode::DirectedAcyclic);
  CHECK(back.role(3) == NodeRole::Output);
  CHECK(back.edge_weight(0, 3) == g.edge_weight(0, 3));  // full precision
  CHECK(back.embedding(3) == g.embedding(3));
  CHECK(back.export_json() == text);
}
