#include "ndp/ndp_diff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ndp {

void DiffDevConfig::validate() const {
  if (growth_steps < 1)
    fail(ErrorKind::Contract, "diff config: growth_steps must be >= 1");
  if (embedding_dim < 3)
    fail(ErrorKind::Contract,
         "diff config: embedding_dim must be >= 3 (bias, activation, state)");
  if (n_in < 1 || n_out < 1)
    fail(ErrorKind::Contract, "diff config: need n_in >= 1 and n_out >= 1");
  if (msg_hidden < 1 || edge_hidden < 1)
    fail(ErrorKind::Contract, "diff config: hidden sizes must be >= 1");
}

NdpDiffParams NdpDiffParams::init(const DiffDevConfig& cfg, Rng& rng) {
  cfg.validate();
  int e = cfg.embedding_dim;
  int h = cfg.msg_hidden;
  int eh = cfg.edge_hidden;
  auto xavier = [&](int rows, int cols) {
    return Tensor::randn(rows, cols, rng, 1.0 / std::sqrt(rows));
  };
  NdpDiffParams p;
  p.seed_embeddings = Tensor::randn(cfg.seed_nodes(), e, rng, 1.0);
  p.msg_self = xavier(e, h);
  p.msg_nbr = xavier(e, h);
  p.msg_out_w = xavier(h, e);
  p.msg_out_b = Tensor(1, e);
  p.repl_self = xavier(e, 1);
  p.repl_nbr = xavier(e, 1);
  p.perturb_w1 = xavier(e, e);
  p.perturb_b1 = Tensor(1, e);
  p.perturb_w2 = xavier(e, e);
  p.perturb_b2 = Tensor(1, e);
  p.edge_w1 = xavier(2 * e, eh);
  p.edge_b1 = Tensor(1, eh);
  p.edge_w2 = xavier(eh, 1);
  p.edge_b2 = Tensor(1, 1);
  return p;
}

std::vector<Tensor*> NdpDiffParams::tensors() {
  return {&seed_embeddings, &msg_self, &msg_nbr, &msg_out_w, &msg_out_b,
          &repl_self,       &repl_nbr, &perturb_w1, &perturb_b1, &perturb_w2,
          &perturb_b2,      &edge_w1,  &edge_b1,  &edge_w2,  &edge_b2};
}

std::vector<const Tensor*> NdpDiffParams::tensors() const {
  auto mutable_list = const_cast<NdpDiffParams*>(this)->tensors();
  return {mutable_list.begin(), mutable_list.end()};
}

int NdpDiffParams::param_count() const {
  int n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::vector<double> NdpDiffParams::pack() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const Tensor* t : tensors())
    flat.insert(flat.end(), t->data.begin(), t->data.end());
  return flat;
}

NdpDiffParams NdpDiffParams::unpack(const DiffDevConfig& cfg,
                                    const std::vector<double>& flat) {
  Rng dummy = make_rng(0);
  NdpDiffParams p = init(cfg, dummy);
  if (static_cast<int>(flat.size()) != p.param_count())
    fail(ErrorKind::Contract,
         "unpack: flat vector length " + std::to_string(flat.size()) +
             " != param count " + std::to_string(p.param_count()));
  size_t pos = 0;
  for (Tensor* t : p.tensors()) {
    std::copy(flat.begin() + pos, flat.begin() + pos + t->size(),
              t->data.begin());
    pos += t->size();
  }
  return p;
}

DiffParamValues stage_params(Tape& tape, const NdpDiffParams& p) {
  DiffParamValues pv;
  Value repl_self, repl_nbr;
  std::vector<Value*> slots = {
      &pv.seed_embeddings, &pv.msg_self, &pv.msg_nbr, &pv.msg_out_w,
      &pv.msg_out_b,       &repl_self,   &repl_nbr,   &pv.perturb_w1,
      &pv.perturb_b1,      &pv.perturb_w2, &pv.perturb_b2, &pv.edge_w1,
      &pv.edge_b1,         &pv.edge_w2,  &pv.edge_b2};
  auto tensors = p.tensors();
  for (size_t i = 0; i < tensors.size(); ++i) {
    *slots[i] = tape.leaf(*tensors[i], true);
    pv.leaves.push_back(*slots[i]);
  }
  return pv;
}

DevGraph seed_graph(const DiffDevConfig& cfg) {
  cfg.validate();
  DevGraph g(GraphMode::DirectedAcyclic);
  std::vector<double> zero(cfg.embedding_dim, 0.0);
  for (int i = 0; i < cfg.n_in; ++i) g.add_node(NodeRole::Input, zero);
  for (int i = 0; i < cfg.n_out; ++i) g.add_node(NodeRole::Output, zero);
  if (cfg.critic) g.add_node(NodeRole::Critic, zero);
  for (int i = 0; i < cfg.n_in; ++i)
    for (int o = 0; o < cfg.n_out; ++o) g.add_edge(i, cfg.n_in + o, 0.0);
  if (cfg.critic)
    for (int i = 0; i < cfg.n_in; ++i)
      g.add_edge(i, cfg.n_in + cfg.n_out, 0.0);
  return g;
}

namespace {

// in-edge endpoint lists in canonical order
void edge_endpoints(const DevGraph& g, std::vector<int>& srcs,
                    std::vector<int>& dsts) {
  srcs.clear();
  dsts.clear();
  for (const auto& [u, v, w] : g.edge_list()) {
    srcs.push_back(u);
    dsts.push_back(v);
  }
}

void sync_graph_embeddings(const Tape& tape, DevGraph& g, Value emb) {
  const Tensor& e = tape.val(emb);
  for (int v = 0; v < g.node_count(); ++v) {
    std::vector<double> row(e.cols);
    for (int j = 0; j < e.cols; ++j) row[j] = e.at(v, j);
    g.set_embedding(v, std::move(row));
  }
}

}  // namespace

Value message_pass(Tape& tape, const DevGraph& g, const DiffParamValues& pv,
                   Value emb) {
  int n = g.node_count();
  std::vector<int> srcs, dsts;
  edge_endpoints(g, srcs, dsts);
  Value nbr_sum = tape.scatter_add_rows(tape.gather_rows(emb, srcs), dsts, n);
  Value h = tape.tanh(
      tape.add(tape.matmul(emb, pv.msg_self), tape.matmul(nbr_sum, pv.msg_nbr)));
  return tape.add(tape.matmul(h, pv.msg_out_w), pv.msg_out_b);
}

namespace {

// replication logits over current embedding values; the draw is a constant
// w.r.t. the tape, so this runs on plain reals
std::vector<double> replication_logits(const Tape& tape, const DevGraph& g,
                                       const NdpDiffParams& p, Value emb) {
  const Tensor& e = tape.val(emb);
  int n = g.node_count();
  int dim = e.cols;
  std::vector<double> nbr(static_cast<size_t>(n) * dim, 0.0);
  for (const auto& [u, v, w] : g.edge_list())
    for (int j = 0; j < dim; ++j)
      nbr[static_cast<size_t>(v) * dim + j] += e.at(u, j);
  std::vector<double> logits(n, 0.0);
  for (int v = 0; v < n; ++v) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j)
      s += e.at(v, j) * p.repl_self.data[j] +
           nbr[static_cast<size_t>(v) * dim + j] * p.repl_nbr.data[j];
    logits[v] = s;
  }
  return logits;
}

}  // namespace

GrowthTrace::Choice grow_step(Tape& tape, DevGraph& g, const NdpDiffParams& p,
                              const DiffParamValues& pv, Value& base,
                              Value& cur, Rng& rng,
                              const GrowthTrace::Choice* forced) {
  int n = g.node_count();
  std::vector<int> candidates;
  for (int v = 0; v < n; ++v)
    if (g.role(v) != NodeRole::Output && g.role(v) != NodeRole::Critic)
      candidates.push_back(v);
  if (candidates.empty())
    fail(ErrorKind::Contract, "grow_step: no replication candidates");

  GrowthTrace::Choice choice;
  if (forced) {
    choice.parent = forced->parent;
  } else {
    auto logits = replication_logits(tape, g, p, cur);
    Tensor probs(static_cast<int>(candidates.size()), 1);
    for (size_t i = 0; i < candidates.size(); ++i)
      probs.data[i] = 1.0 / (1.0 + std::exp(-logits[candidates[i]]));
    choice.parent = candidates[sample_categorical(probs, rng)];
  }

  // destinations: strictly later in topological order, plus every output
  // and the critic; inputs sit at depth zero and never qualify
  auto topo = g.topological_order();
  std::vector<int> topo_index(n);
  for (int i = 0; i < n; ++i) topo_index[topo[i]] = i;
  std::vector<int> dests;
  for (int v = 0; v < n; ++v) {
    if (g.role(v) == NodeRole::Input) continue;
    bool later = topo_index[v] > topo_index[choice.parent];
    bool always = g.role(v) == NodeRole::Output || g.role(v) == NodeRole::Critic;
    if (later || always) dests.push_back(v);
  }
  if (forced) {
    choice.dest = forced->dest;
  } else {
    std::uniform_int_distribution<size_t> pick_dest(0, dests.size() - 1);
    choice.dest = dests[pick_dest(rng)];
  }

  Value parent_emb = tape.gather_rows(cur, {choice.parent});
  Value h = tape.tanh(tape.add(tape.matmul(parent_emb, pv.perturb_w1),
                               pv.perturb_b1));
  Value child_emb =
      tape.tanh(tape.add(tape.matmul(h, pv.perturb_w2), pv.perturb_b2));
  base = tape.concat_rows(base, child_emb);
  cur = tape.concat_rows(cur, child_emb);

  const Tensor& ce = tape.val(child_emb);
  int child = g.add_node(NodeRole::Hidden, ce.data);
  g.add_edge(choice.parent, child, 0.0);
  g.add_edge(child, choice.dest, 0.0);
  return choice;
}

std::pair<std::vector<std::pair<int, int>>, Value> predict_edges(
    Tape& tape, DevGraph& g, const DiffParamValues& pv, Value emb) {
  std::vector<int> srcs, dsts;
  edge_endpoints(g, srcs, dsts);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(srcs.size());
  for (size_t i = 0; i < srcs.size(); ++i) edges.emplace_back(srcs[i], dsts[i]);

  Value pair = tape.concat_cols(tape.gather_rows(emb, srcs),
                                tape.gather_rows(emb, dsts));
  Value h = tape.tanh(tape.add(tape.matmul(pair, pv.edge_w1), pv.edge_b1));
  Value w = tape.tanh(tape.add(tape.matmul(h, pv.edge_w2), pv.edge_b2));

  const Tensor& wv = tape.val(w);
  for (size_t i = 0; i < edges.size(); ++i)
    g.add_edge(edges[i].first, edges[i].second, wv.at(static_cast<int>(i), 0));
  return {std::move(edges), w};
}

GrownNet develop_diff(Tape& tape, const NdpDiffParams& p,
                      const DiffDevConfig& cfg, Rng& rng,
                      const GrowthTrace* trace, bool predict_each_step,
                      const SnapshotFn& snapshot) {
  cfg.validate();
  DiffParamValues pv = stage_params(tape, p);

  GrownNet net;
  net.params = pv;
  net.graph = seed_graph(cfg);
  Value base = pv.seed_embeddings;  // stored states, change only at birth
  Value cur = base;                 // after this step's message pass
  sync_graph_embeddings(tape, net.graph, base);
  if (snapshot) snapshot(0, net.graph);

  size_t event = 0;
  for (int step = 1; step <= cfg.growth_steps; ++step) {
    cur = message_pass(tape, net.graph, pv, base);
    if (step % 2 == 0) {  // replication happens every other growth step
      const GrowthTrace::Choice* forced = nullptr;
      if (trace) {
        if (event >= trace->choices.size())
          fail(ErrorKind::Contract, "develop_diff: trace too short for replay");
        forced = &trace->choices[event];
      }
      net.trace.choices.push_back(
          grow_step(tape, net.graph, p, pv, base, cur, rng, forced));
      ++event;
    }
    bool last = step == cfg.growth_steps;
    if (predict_each_step || last)
      std::tie(net.edges, net.edge_weights) =
          predict_edges(tape, net.graph, pv, cur);
    if (snapshot) {
      sync_graph_embeddings(tape, net.graph, cur);
      snapshot(step, net.graph);
    }
  }

  sync_graph_embeddings(tape, net.graph, cur);
  net.embeddings = cur;
  net.biases = tape.pick(cur, std::vector<int>(net.graph.node_count(), 0));
  net.topo_order = net.graph.topological_order();

  const Tensor& ev = tape.val(cur);
  net.activations.resize(net.graph.node_count());
  for (int v = 0; v < net.graph.node_count(); ++v) {
    double t = std::tanh(ev.at(v, 1));
    net.activations[v] = t < -1.0 / 3.0  ? NodeActivation::TanhAct
                         : t <= 1.0 / 3.0 ? NodeActivation::ReluAct
                                          : NodeActivation::IdentityAct;
  }
  return net;
}

ForwardResult forward_dag(Tape& tape, const GrownNet& net,
                          const DiffDevConfig& cfg, const Tensor& obs) {
  const DevGraph& g = net.graph;
  if (obs.cols != cfg.n_in)
    fail(ErrorKind::Contract, "forward_dag: observation width " +
                                  std::to_string(obs.cols) + " != n_in " +
                                  std::to_string(cfg.n_in));
  int n = g.node_count();
  int batch = obs.rows;

  std::map<std::pair<int, int>, int> edge_index;
  for (size_t i = 0; i < net.edges.size(); ++i)
    edge_index[net.edges[i]] = static_cast<int>(i);

  Value ones = tape.constant(Tensor(batch, 1, 1.0));
  std::vector<Value> act(n);
  for (int v : net.topo_order) {
    if (g.role(v) == NodeRole::Input) {
      Tensor column(batch, 1);
      for (int r = 0; r < batch; ++r) column.at(r, 0) = obs.at(r, v);
      act[v] = tape.constant(std::move(column));
      continue;
    }
    Value bias = tape.gather_rows(net.biases, {v});
    Value sum = tape.mul(ones, bias);  // bias broadcast over the batch
    for (int u : g.in_neighbors(v)) {
      auto it = edge_index.find({u, v});
      if (it == edge_index.end())
        fail(ErrorKind::Contract, "forward_dag: edge weights out of date");
      Value w = tape.gather_rows(net.edge_weights, {it->second});
      sum = tape.add(sum, tape.mul(act[u], w));
    }
    if (g.role(v) == NodeRole::Hidden) {
      switch (net.activations[v]) {
        case NodeActivation::TanhAct: sum = tape.tanh(sum); break;
        case NodeActivation::ReluAct: sum = tape.relu(sum); break;
        case NodeActivation::IdentityAct: break;
      }
    }
    act[v] = sum;  // outputs and critic are read raw
  }

  ForwardResult out;
  out.logits = act[cfg.n_in];
  for (int o = 1; o < cfg.n_out; ++o)
    out.logits = tape.concat_cols(out.logits, act[cfg.n_in + o]);
  if (cfg.critic) {
    out.critic = act[cfg.n_in + cfg.n_out];
    out.has_critic = true;
  }
  return out;
}

CompiledNet compile(const Tape& tape, const GrownNet& net,
                    const DiffDevConfig& cfg) {
  CompiledNet c;
  c.n_in = cfg.n_in;
  c.n_out = cfg.n_out;
  c.has_critic = cfg.critic;
  c.in_edges.resize(net.graph.node_count());
  for (const auto& [u, v, w] : net.graph.edge_list())
    c.in_edges[v].emplace_back(u, w);
  const Tensor& bias = tape.val(net.biases);
  c.bias.assign(bias.data.begin(), bias.data.end());
  c.activations = net.activations;
  c.topo_order = net.topo_order;
  c.roles.resize(net.graph.node_count());
  for (int v = 0; v < net.graph.node_count(); ++v) c.roles[v] = net.graph.role(v);
  return c;
}

std::vector<double> CompiledNet::forward(const std::vector<double>& obs,
                                         double* critic_out) const {
  if (static_cast<int>(obs.size()) != n_in)
    fail(ErrorKind::Contract, "compiled forward: observation length mismatch");
  size_t n = roles.size();
  std::vector<double> act(n, 0.0);
  for (int i = 0; i < n_in; ++i) act[i] = obs[i];
  for (int v : topo_order) {
    if (roles[v] == NodeRole::Input) continue;
    double s = bias[v];
    for (const auto& [u, w] : in_edges[v]) s += w * act[u];
    if (roles[v] == NodeRole::Hidden) {
      switch (activations[v]) {
        case NodeActivation::TanhAct: s = std::tanh(s); break;
        case NodeActivation::ReluAct: s = s > 0 ? s : 0; break;
        case NodeActivation::IdentityAct: break;
      }
    }
    act[v] = s;
  }
  std::vector<double> out(act.begin() + n_in, act.begin() + n_in + n_out);
  if (critic_out && has_critic) *critic_out = act[n_in + n_out];
  return out;
}

}  // namespace ndp
