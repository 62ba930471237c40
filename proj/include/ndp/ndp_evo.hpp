#pragma once

#include <functional>
#include <vector>

#include "ndp/graph.hpp"

namespace ndp {

// Single-hidden-layer perceptron on plain reals (the evolutionary variant is
// searched, never differentiated). Weights are stored input-major: w1 is
// (in x hidden), w2 is (hidden x out).
struct EvoMlp {
  enum class OutAct { Linear, Tanh, Sigmoid };

  int in = 0, hidden = 0, out = 0;
  OutAct out_act = OutAct::Linear;
  std::vector<double> w1, b1, w2, b2;

  EvoMlp() = default;
  EvoMlp(int in_dim, int hidden_dim, int out_dim, OutAct act);
  int param_count() const { return in * hidden + hidden + hidden * out + out; }
  void forward(const double* x, double* y) const;
};

// Genome of the evolutionary NDP: three shared per-node networks plus the
// embedding of the initial node.
struct NdpEvoParams {
  EvoMlp gnca;          // concat(own, mean neighbor) -> new embedding
  EvoMlp replication;   // embedding -> grow probability
  EvoMlp weight_model;  // concat(pair) -> edge weight
  std::vector<double> seed_embedding;
};

struct EvoDevConfig {
  int cycles = 4;
  double pruning_threshold = 0.01;
  int embedding_dim = 4;   // E
  int hidden = 8;          // GNCA hidden width
  int hidden_repl = 3;     // replication hidden width
  int hidden_weight = 3;   // weight model hidden width
  bool weighted = true;
  int max_nodes = 128;
  bool co_evolve_seed = true;        // seed embedding rides in the genome
  double replication_threshold = 0.5;
  bool io_pair_exclusion = true;     // no new input-input / output-output edges
  bool clamp_inputs = true;          // hold inputs fixed during recurrence
  // Deterministic per-child embedding perturbation (seeded by the child id,
  // independent of the genome). Without it a single-seed graph keeps every
  // node embedding identical forever, which collapses all predicted weights
  // to one value; set to 0 for exact mean inheritance.
  double child_noise = 0.1;
};

// Flat-genome layout: gnca, replication, weight_model (each w1,b1,w2,b2),
// then seed embedding when co-evolved. The count depends only on the config,
// never on the grown graph.
int evo_param_count(const EvoDevConfig& cfg);
std::vector<double> pack_evo_params(const NdpEvoParams& p,
                                    const EvoDevConfig& cfg);
NdpEvoParams unpack_evo_params(const EvoDevConfig& cfg,
                               const std::vector<double>& flat);

// Synchronous GNCA update: every node maps (own embedding, mean of neighbor
// embeddings) through the shared MLP; isolated nodes see a zero neighbor
// term. All reads are from the pre-step state.
void gnca_propagate(DevGraph& g, const NdpEvoParams& p, int steps);

// One replication pass. Nodes whose replication output exceeds the threshold
// each spawn a child wired to the parent and the parent's pre-replication
// neighbors; the child embedding is the mean over everything it wires to.
// Growth past max_nodes is truncated in ascending parent-id order.
int replicate(DevGraph& g, const NdpEvoParams& p, const EvoDevConfig& cfg);

// Re-predicts the weight of every admissible node pair from the symmetrized
// MLP output. Pairs of two inputs or two outputs are skipped for edge
// creation (existing edges are still re-weighted) unless the exclusion knob
// is off.
void update_weights(DevGraph& g, const NdpEvoParams& p,
                    const EvoDevConfig& cfg);

// Removes edges with |weight| < threshold; nodes always survive.
int prune(DevGraph& g, double threshold);

struct DevelopResult {
  DevGraph graph{GraphMode::Undirected};
  bool viable = false;
  std::vector<int> node_counts;  // node count after each cycle (seed first)
};

using CycleSnapshotFn = std::function<void(int cycle, const DevGraph&)>;

// Algorithm: grow from a single seed node for cfg.cycles developmental
// cycles (propagate D steps, replicate, re-weight, prune), then assign the
// n_in lowest ids as inputs and the n_out highest as outputs.
DevelopResult develop(const NdpEvoParams& p, const EvoDevConfig& cfg, int n_in,
                      int n_out, const CycleSnapshotFn& snapshot = nullptr);

// Recurrent scalar evaluation of a grown undirected network: activations
// start at zero, inputs take the observation, and every other node updates
// synchronously to tanh of its weighted neighbor sum. prop_steps <= 0 means
// one diameter's worth of steps.
std::vector<double> evaluate_recurrent(const DevGraph& g,
                                       const std::vector<double>& obs,
                                       int prop_steps = 0,
                                       bool clamp_inputs = true);

}  // namespace ndp
