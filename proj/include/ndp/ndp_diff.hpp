#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ndp/graph.hpp"
#include "ndp/tape.hpp"

namespace ndp {

struct DiffDevConfig {
  int growth_steps = 48;  // developmental steps per grown network
  int embedding_dim = 12; // E; channel 0 = bias, channel 1 = activation
  int n_in = 4;
  int n_out = 2;
  bool critic = false;    // extra value-head node for PPO
  int msg_hidden = 32;    // graph convolution width
  int edge_hidden = 32;   // edge prediction MLP hidden width

  int seed_nodes() const { return n_in + n_out + (critic ? 1 : 0); }
  void validate() const;
};

// Trainable parameters of the differentiable NDP. The count is independent
// of how large the grown graph gets.
struct NdpDiffParams {
  Tensor seed_embeddings;             // seed_nodes x E
  Tensor msg_self, msg_nbr;           // E x msg_hidden
  Tensor msg_out_w, msg_out_b;        // msg_hidden x E, 1 x E
  Tensor repl_self, repl_nbr;         // E x 1 (replication logits; no gradient
                                      // ever reaches these -- the parent draw
                                      // is treated as a constant)
  Tensor perturb_w1, perturb_b1;      // E x E, 1 x E
  Tensor perturb_w2, perturb_b2;      // E x E, 1 x E
  Tensor edge_w1, edge_b1;            // 2E x edge_hidden, 1 x edge_hidden
  Tensor edge_w2, edge_b2;            // edge_hidden x 1, 1 x 1

  static NdpDiffParams init(const DiffDevConfig& cfg, Rng& rng);
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  int param_count() const;
  std::vector<double> pack() const;
  static NdpDiffParams unpack(const DiffDevConfig& cfg,
                              const std::vector<double>& flat);
};

// Parameter leaves staged on a tape, in NdpDiffParams::tensors() order.
struct DiffParamValues {
  std::vector<Value> leaves;
  Value seed_embeddings, msg_self, msg_nbr, msg_out_w, msg_out_b;
  Value perturb_w1, perturb_b1, perturb_w2, perturb_b2;
  Value edge_w1, edge_b1, edge_w2, edge_b2;
};
DiffParamValues stage_params(Tape& tape, const NdpDiffParams& p);

// Sampled growth decisions, recorded so an update epoch can re-develop the
// same topology under changed parameters.
struct GrowthTrace {
  struct Choice {
    int parent = -1;
    int dest = -1;
  };
  std::vector<Choice> choices;
};

enum class NodeActivation { TanhAct = 0, ReluAct = 1, IdentityAct = 2 };

// A grown feedforward network whose weights and biases are live tape values.
struct GrownNet {
  DevGraph graph{GraphMode::DirectedAcyclic};
  std::vector<std::pair<int, int>> edges;  // canonical order of edge_weights
  Value edge_weights;                      // |edges| x 1
  Value embeddings;                        // N x E
  Value biases;                            // N x 1 (embedding channel 0)
  std::vector<int> topo_order;
  std::vector<NodeActivation> activations; // binned from embedding channel 1
  GrowthTrace trace;
  DiffParamValues params;  // the leaves this net was grown from
};

// Fully connected seed: every input feeds every output (plus the critic,
// when enabled, fed by all inputs). Node ids: inputs, then outputs, then
// critic.
DevGraph seed_graph(const DiffDevConfig& cfg);

// One synchronous graph-convolution update of all node embeddings:
// tanh(W_self e_v + W_nbr sum of in-neighbor embeddings) through the output
// linear layer. Nodes without in-edges see a zero neighbor sum.
Value message_pass(Tape& tape, const DevGraph& g, const DiffParamValues& pv,
                   Value emb);

// One replication event: sample a parent from sigmoid-normalized replication
// logits over non-output non-critic nodes, append the perturbed child, wire
// parent->child and child->(random node strictly later in topological order;
// outputs and the critic always qualify, inputs never do). `base` holds the
// per-node stored states (what message passing reads), `cur` the states
// after this step's message pass (what replication and edge prediction
// read); the child row is appended to both. `forced` replays a recorded
// choice.
GrowthTrace::Choice grow_step(Tape& tape, DevGraph& g, const NdpDiffParams& p,
                              const DiffParamValues& pv, Value& base,
                              Value& cur, Rng& rng,
                              const GrowthTrace::Choice* forced = nullptr);

// Edge weights for every existing edge from the edge MLP over concatenated
// (source, destination) embeddings; mirrors the values into the graph.
std::pair<std::vector<std::pair<int, int>>, Value> predict_edges(
    Tape& tape, DevGraph& g, const DiffParamValues& pv, Value emb);

using SnapshotFn = std::function<void(int step, const DevGraph&)>;

// The developmental loop: growth_steps iterations, each applying one
// message pass to the stored node states over the current topology, a
// replication event on every second step, and edge re-prediction. Stored
// states change only at node birth (seed leaves; perturbed parent states
// for children), so gradients reach every trainable leaf through a bounded
// depth regardless of growth_steps. When `trace` is given the recorded
// choices are replayed instead of sampled. `predict_each_step` keeps
// intermediate weights up to date (snapshot export); training only needs
// the final prediction, which is identical.
GrownNet develop_diff(Tape& tape, const NdpDiffParams& p,
                      const DiffDevConfig& cfg, Rng& rng,
                      const GrowthTrace* trace = nullptr,
                      bool predict_each_step = false,
                      const SnapshotFn& snapshot = nullptr);

struct ForwardResult {
  Value logits;  // batch x n_out
  Value critic;  // batch x 1 when the net has a critic node
  bool has_critic = false;
};

// Executes the grown DAG on a batch of observations. Hidden nodes apply
// their binned activation; output and critic nodes are read raw.
ForwardResult forward_dag(Tape& tape, const GrownNet& net,
                          const DiffDevConfig& cfg, const Tensor& obs);

// Tape-free mirror of forward_dag over plain reals, for rollouts and
// evaluation. Produced from a GrownNet after development.
struct CompiledNet {
  int n_in = 0, n_out = 0;
  bool has_critic = false;
  std::vector<std::vector<std::pair<int, double>>> in_edges;  // per node
  std::vector<double> bias;
  std::vector<NodeActivation> activations;
  std::vector<NodeRole> roles;
  std::vector<int> topo_order;

  std::vector<double> forward(const std::vector<double>& obs,
                              double* critic_out = nullptr) const;
};
CompiledNet compile(const Tape& tape, const GrownNet& net,
                    const DiffDevConfig& cfg);

}  // namespace ndp
