#include "ndp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>
#include <sstream>

#include "ndp/rng.hpp"
#include "json.hpp"

namespace ndp {

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::Input: return "input";
    case NodeRole::Hidden: return "hidden";
    case NodeRole::Output: return "output";
    case NodeRole::Critic: return "critic";
  }
  return "hidden";
}

NodeRole role_from_name(const std::string& s) {
  if (s == "input") return NodeRole::Input;
  if (s == "hidden") return NodeRole::Hidden;
  if (s == "output") return NodeRole::Output;
  if (s == "critic") return NodeRole::Critic;
  fail(ErrorKind::Parse, "unknown node role '" + s + "'");
}

void DevGraph::check_node(int v, const char* op) const {
  if (v < 0 || v >= node_count())
    fail(ErrorKind::Structural, std::string(op) + ": node " +
                                    std::to_string(v) + " does not exist");
}

int DevGraph::add_node(NodeRole role, std::vector<double> embedding) {
  if (embedding_dim_ < 0) {
    embedding_dim_ = static_cast<int>(embedding.size());
  } else if (static_cast<int>(embedding.size()) != embedding_dim_) {
    fail(ErrorKind::Structural,
         "add_node: embedding dimension " + std::to_string(embedding.size()) +
             " != graph dimension " + std::to_string(embedding_dim_));
  }
  roles_.push_back(role);
  embeddings_.push_back(std::move(embedding));
  activations_.push_back(0.0);
  adj_.emplace_back();
  in_adj_.emplace_back();
  out_adj_.emplace_back();
  return node_count() - 1;
}

std::pair<int, int> DevGraph::edge_key(int src, int dst) const {
  if (mode_ == GraphMode::Undirected && src > dst) std::swap(src, dst);
  return {src, dst};
}

bool DevGraph::would_create_cycle(int src, int dst) const {
  // adding src->dst closes a cycle iff src is reachable from dst
  std::vector<bool> seen(node_count(), false);
  std::deque<int> stack{dst};
  seen[dst] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (v == src) return true;
    for (int w : out_adj_[v])
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return false;
}

void DevGraph::add_edge(int src, int dst, double weight) {
  check_node(src, "add_edge");
  check_node(dst, "add_edge");
  if (src == dst)
    fail(ErrorKind::Structural,
         "add_edge: self-loop on node " + std::to_string(src));
  auto key = edge_key(src, dst);
  auto it = edges_.find(key);
  if (it != edges_.end()) {
    it->second = weight;
    return;
  }
  if (mode_ == GraphMode::DirectedAcyclic && would_create_cycle(src, dst))
    fail(ErrorKind::Structural, "add_edge: " + std::to_string(src) + "->" +
                                    std::to_string(dst) + " would create a cycle");
  edges_.emplace(key, weight);
  adj_[key.first].push_back(key.second);
  adj_[key.second].push_back(key.first);
  if (mode_ == GraphMode::DirectedAcyclic) {
    out_adj_[src].push_back(dst);
    in_adj_[dst].push_back(src);
  }
}

bool DevGraph::has_edge(int src, int dst) const {
  if (src < 0 || dst < 0 || src >= node_count() || dst >= node_count())
    return false;
  return edges_.count(edge_key(src, dst)) != 0;
}

double DevGraph::edge_weight(int src, int dst) const {
  auto it = edges_.find(edge_key(src, dst));
  if (it == edges_.end())
    fail(ErrorKind::Structural, "edge_weight: no edge " + std::to_string(src) +
                                    "," + std::to_string(dst));
  return it->second;
}

bool DevGraph::remove_edge(int src, int dst) {
  auto key = edge_key(src, dst);
  auto it = edges_.find(key);
  if (it == edges_.end()) return false;
  edges_.erase(it);
  auto drop = [](std::vector<int>& v, int x) {
    v.erase(std::find(v.begin(), v.end(), x));
  };
  drop(adj_[key.first], key.second);
  drop(adj_[key.second], key.first);
  if (mode_ == GraphMode::DirectedAcyclic) {
    drop(out_adj_[key.first], key.second);
    drop(in_adj_[key.second], key.first);
  }
  return true;
}

void DevGraph::set_embedding(int v, std::vector<double> e) {
  check_node(v, "set_embedding");
  if (static_cast<int>(e.size()) != embedding_dim_)
    fail(ErrorKind::Structural, "set_embedding: dimension mismatch");
  embeddings_[v] = std::move(e);
}

void DevGraph::zero_activations() {
  std::fill(activations_.begin(), activations_.end(), 0.0);
}

std::vector<int> DevGraph::neighbors(int v) const {
  check_node(v, "neighbors");
  std::vector<int> out = adj_[v];
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> DevGraph::in_neighbors(int v) const {
  check_node(v, "in_neighbors");
  std::vector<int> out = in_adj_[v];
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> DevGraph::out_neighbors(int v) const {
  check_node(v, "out_neighbors");
  std::vector<int> out = out_adj_[v];
  std::sort(out.begin(), out.end());
  return out;
}

int DevGraph::degree(int v) const {
  check_node(v, "degree");
  return static_cast<int>(adj_[v].size());
}

std::vector<std::tuple<int, int, double>> DevGraph::edge_list() const {
  std::vector<std::tuple<int, int, double>> out;
  out.reserve(edges_.size());
  for (const auto& [key, w] : edges_) out.emplace_back(key.first, key.second, w);
  return out;
}

namespace {

// single-source BFS over an adjacency list; returns hop distances, -1 if
// unreachable
std::vector<int> bfs(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{start};
  dist[start] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : adj[v])
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

}  // namespace

int DevGraph::diameter() const {
  if (node_count() == 0)
    fail(ErrorKind::Contract, "diameter: empty graph");
  // identify the largest connected component, then take the max eccentricity
  std::vector<int> comp(node_count(), -1);
  int ncomp = 0;
  for (int v = 0; v < node_count(); ++v) {
    if (comp[v] >= 0) continue;
    auto dist = bfs(adj_, v);
    for (int w = 0; w < node_count(); ++w)
      if (dist[w] >= 0) comp[w] = ncomp;
    ++ncomp;
  }
  std::vector<int> comp_size(ncomp, 0);
  for (int v = 0; v < node_count(); ++v) comp_size[comp[v]]++;
  int big = static_cast<int>(std::max_element(comp_size.begin(), comp_size.end()) -
                             comp_size.begin());
  int diam = 0;
  for (int v = 0; v < node_count(); ++v) {
    if (comp[v] != big) continue;
    auto dist = bfs(adj_, v);
    for (int w = 0; w < node_count(); ++w)
      if (comp[w] == big) diam = std::max(diam, dist[w]);
  }
  return diam;
}

std::vector<int> DevGraph::topological_order() const {
  if (mode_ != GraphMode::DirectedAcyclic)
    fail(ErrorKind::Mode, "topological_order: graph is not directed");
  std::vector<int> indeg(node_count());
  for (int v = 0; v < node_count(); ++v)
    indeg[v] = static_cast<int>(in_adj_[v].size());
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < node_count(); ++v)
    if (indeg[v] == 0) ready.push(v);
  std::vector<int> order;
  order.reserve(node_count());
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : out_adj_[v])
      if (--indeg[w] == 0) ready.push(w);
  }
  if (static_cast<int>(order.size()) != node_count())
    fail(ErrorKind::Structural, "topological_order: graph has a cycle");
  return order;
}

double mean_clustering(const std::vector<std::vector<int>>& adj) {
  size_t n = adj.size();
  double total = 0.0;
  std::vector<std::vector<int>> sorted(adj);
  for (auto& nb : sorted) std::sort(nb.begin(), nb.end());
  for (size_t v = 0; v < n; ++v) {
    size_t d = sorted[v].size();
    if (d < 2) continue;  // contributes 0
    int links = 0;
    for (size_t i = 0; i < d; ++i)
      for (size_t j = i + 1; j < d; ++j) {
        int a = sorted[v][i], b = sorted[v][j];
        if (std::binary_search(sorted[a].begin(), sorted[a].end(), b)) ++links;
      }
    total += 2.0 * links / (static_cast<double>(d) * (d - 1));
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

bool connected(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return false;
  auto dist = bfs(adj, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

double mean_shortest_path(const std::vector<std::vector<int>>& adj) {
  size_t n = adj.size();
  double total = 0.0;
  size_t pairs = 0;
  for (size_t v = 0; v < n; ++v) {
    auto dist = bfs(adj, static_cast<int>(v));
    for (size_t w = v + 1; w < n; ++w) {
      if (dist[w] < 0)
        fail(ErrorKind::Metric, "mean_shortest_path: graph is disconnected");
      total += dist[w];
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

namespace {

std::vector<std::vector<int>> random_connected_graph(int n, int m, Rng& rng) {
  long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
  if (m > max_edges)
    fail(ErrorKind::Metric, "random reference: too many edges for node count");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::set<std::pair<int, int>> picked;
    std::uniform_int_distribution<int> node(0, n - 1);
    while (static_cast<int>(picked.size()) < m) {
      int a = node(rng), b = node(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      picked.emplace(a, b);
    }
    std::vector<std::vector<int>> adj(n);
    for (auto& [a, b] : picked) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    if (connected(adj)) return adj;
  }
  fail(ErrorKind::Metric,
       "random reference: no connected G(n,m) sample in 100 attempts");
}

std::vector<std::vector<int>> ring_lattice(int n, int k) {
  // each node connects to k/2 nearest neighbors on both sides
  std::vector<std::vector<int>> adj(n);
  int half = std::min(k / 2, (n - 1) / 2);
  std::set<std::pair<int, int>> picked;
  for (int v = 0; v < n; ++v)
    for (int off = 1; off <= half; ++off) {
      int w = (v + off) % n;
      int a = std::min(v, w), b = std::max(v, w);
      picked.emplace(a, b);
    }
  for (auto& [a, b] : picked) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

}  // namespace

SmallWorldReport DevGraph::small_world_metrics(int n_random_refs,
                                               std::uint64_t rng_seed) const {
  int n = node_count();
  if (n < 4)
    fail(ErrorKind::Metric, "small_world_metrics: need at least 4 nodes");
  if (n_random_refs < 1)
    fail(ErrorKind::Contract, "small_world_metrics: need at least 1 reference");
  std::vector<std::vector<int>> adj(n);
  for (const auto& [key, w] : edges_) {
    adj[key.first].push_back(key.second);
    adj[key.second].push_back(key.first);
  }
  if (!connected(adj))
    fail(ErrorKind::Metric, "small_world_metrics: graph is disconnected");
  int m = edge_count();

  SmallWorldReport rep;
  rep.c = mean_clustering(adj);
  rep.l = mean_shortest_path(adj);

  Rng rng = make_rng(rng_seed);
  double cr = 0.0, lr = 0.0;
  for (int i = 0; i < n_random_refs; ++i) {
    auto ref = random_connected_graph(n, m, rng);
    cr += mean_clustering(ref);
    lr += mean_shortest_path(ref);
  }
  rep.c_r = cr / n_random_refs;
  rep.l_r = lr / n_random_refs;

  // ring lattice with the same node count and nearest even mean degree
  int k = 2 * static_cast<int>(std::llround(static_cast<double>(m) / n));
  if (k < 2)
    fail(ErrorKind::Metric,
         "small_world_metrics: lattice degree below 2 (graph too sparse)");
  rep.c_l = mean_clustering(ring_lattice(n, k));

  // triangle-free graphs have c = 0 and pin both clustering ratios to 0;
  // a zero reference under nonzero c is a degenerate comparison
  double c_ratio_r, c_ratio_l;
  if (rep.c == 0.0) {
    c_ratio_r = 0.0;
    c_ratio_l = 0.0;
  } else if (rep.c_r == 0.0 || rep.c_l == 0.0) {
    fail(ErrorKind::Metric,
         "small_world_metrics: reference clustering is zero");
  } else {
    c_ratio_r = rep.c / rep.c_r;
    c_ratio_l = rep.c / rep.c_l;
  }
  rep.sigma = c_ratio_r / (rep.l / rep.l_r);
  rep.omega = rep.l_r / rep.l - c_ratio_l;
  return rep;
}

std::string DevGraph::export_dot() const {
  bool directed = mode_ == GraphMode::DirectedAcyclic;
  std::ostringstream out;
  out << (directed ? "digraph" : "graph") << " g {\n";
  for (int v = 0; v < node_count(); ++v) {
    const char* color = "white";
    switch (roles_[v]) {
      case NodeRole::Input: color = "red"; break;
      case NodeRole::Output: color = "blue"; break;
      case NodeRole::Critic: color = "green"; break;
      case NodeRole::Hidden: color = "white"; break;
    }
    out << "  " << v << " [style=filled, fillcolor=" << color << "];\n";
  }
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& [key, w] : edges_)
    out << "  " << key.first << (directed ? " -> " : " -- ") << key.second
        << " [label=\"" << w << "\"];\n";
  out << "}\n";
  return out.str();
}

std::string DevGraph::export_json() const {
  nlohmann::json j;
  j["mode"] = mode_ == GraphMode::Undirected ? "undirected" : "dag";
  j["nodes"] = nlohmann::json::array();
  for (int v = 0; v < node_count(); ++v)
    j["nodes"].push_back({{"id", v},
                          {"role", role_name(roles_[v])},
                          {"embedding", embeddings_[v]}});
  j["edges"] = nlohmann::json::array();
  for (const auto& [key, w] : edges_)
    j["edges"].push_back({{"src", key.first}, {"dst", key.second}, {"w", w}});
  return j.dump(2);
}

DevGraph DevGraph::import_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("graph json: ") + e.what());
  }
  try {
    std::string mode = j.at("mode").get<std::string>();
    DevGraph g(mode == "undirected" ? GraphMode::Undirected
                                    : GraphMode::DirectedAcyclic);
    for (const auto& node : j.at("nodes")) {
      int id = g.add_node(role_from_name(node.at("role").get<std::string>()),
                          node.at("embedding").get<std::vector<double>>());
      if (id != node.at("id").get<int>())
        fail(ErrorKind::Parse, "graph json: node ids must be consecutive");
    }
    for (const auto& edge : j.at("edges"))
      g.add_edge(edge.at("src").get<int>(), edge.at("dst").get<int>(),
                 edge.at("w").get<double>());
    return g;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("graph json: ") + e.what());
  }
}

}  // namespace ndp
