#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ndp/error.hpp"

namespace ndp {

enum class GraphMode { Undirected, DirectedAcyclic };
enum class NodeRole { Input, Hidden, Output, Critic };

const char* role_name(NodeRole r);
NodeRole role_from_name(const std::string& s);

struct SmallWorldReport {
  double c = 0.0;      // average clustering coefficient
  double l = 0.0;      // average shortest path length
  double c_r = 0.0;    // clustering of equivalent random graphs
  double l_r = 0.0;    // path length of equivalent random graphs
  double c_l = 0.0;    // clustering of equivalent ring lattice
  double sigma = 0.0;  // (c/c_r)/(l/l_r)
  double omega = 0.0;  // l_r/l - c/c_l
};

// The growing network shared by both NDP variants. A value type: copy per
// worker, no internal sharing. Node ids are dense, assigned in creation
// order, and never reused; edges may be removed but nodes never are.
class DevGraph {
 public:
  explicit DevGraph(GraphMode mode = GraphMode::Undirected) : mode_(mode) {}

  GraphMode mode() const { return mode_; }
  int node_count() const { return static_cast<int>(roles_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int embedding_dim() const { return embedding_dim_; }

  // Appends a node with the next consecutive id; activation starts at zero.
  // The first node fixes the embedding dimension E.
  int add_node(NodeRole role, std::vector<double> embedding);

  // Inserts or overwrites an edge. Undirected mode stores (a,b) and (b,a) as
  // one edge; DAG mode rejects edges that would create a cycle.
  void add_edge(int src, int dst, double weight);
  bool has_edge(int src, int dst) const;
  double edge_weight(int src, int dst) const;
  bool remove_edge(int src, int dst);

  NodeRole role(int v) const { return roles_.at(v); }
  void set_role(int v, NodeRole r) { roles_.at(v) = r; }
  const std::vector<double>& embedding(int v) const { return embeddings_.at(v); }
  void set_embedding(int v, std::vector<double> e);
  double activation(int v) const { return activations_.at(v); }
  void set_activation(int v, double a) { activations_.at(v) = a; }
  void zero_activations();

  // Neighbors in the undirected sense (for DAG graphs: union of in and out).
  std::vector<int> neighbors(int v) const;
  std::vector<int> in_neighbors(int v) const;   // DAG mode
  std::vector<int> out_neighbors(int v) const;  // DAG mode
  int degree(int v) const;

  // Edges in canonical (src,dst) ascending order; undirected edges appear
  // once with src < dst.
  std::vector<std::tuple<int, int, double>> edge_list() const;

  // Hop-count diameter of the largest connected component, edges treated as
  // unweighted and undirected. A single node has diameter 0.
  int diameter() const;

  // Node order where every edge (u,v) has u before v; ties broken by
  // ascending id. DAG mode only.
  std::vector<int> topological_order() const;

  SmallWorldReport small_world_metrics(int n_random_refs,
                                       std::uint64_t rng_seed) const;

  std::string export_dot() const;
  std::string export_json() const;
  static DevGraph import_json(const std::string& text);

 private:
  std::pair<int, int> edge_key(int src, int dst) const;
  bool would_create_cycle(int src, int dst) const;
  void check_node(int v, const char* op) const;

  GraphMode mode_;
  int embedding_dim_ = -1;
  std::vector<NodeRole> roles_;
  std::vector<std::vector<double>> embeddings_;
  std::vector<double> activations_;
  std::map<std::pair<int, int>, double> edges_;
  std::vector<std::vector<int>> adj_;      // undirected view
  std::vector<std::vector<int>> in_adj_;   // DAG mode
  std::vector<std::vector<int>> out_adj_;  // DAG mode
};

// Clustering coefficient and mean shortest path helpers shared with the
// metric reference constructions; adjacency is an undirected neighbor list.
double mean_clustering(const std::vector<std::vector<int>>& adj);
bool connected(const std::vector<std::vector<int>>& adj);
double mean_shortest_path(const std::vector<std::vector<int>>& adj);

}  // namespace ndp
