#include "ndp/ndp_evo.hpp"

#include <algorithm>
#include <cmath>

#include "ndp/rng.hpp"

namespace ndp {

EvoMlp::EvoMlp(int in_dim, int hidden_dim, int out_dim, OutAct act)
    : in(in_dim),
      hidden(hidden_dim),
      out(out_dim),
      out_act(act),
      w1(static_cast<size_t>(in_dim) * hidden_dim, 0.0),
      b1(hidden_dim, 0.0),
      w2(static_cast<size_t>(hidden_dim) * out_dim, 0.0),
      b2(out_dim, 0.0) {}

void EvoMlp::forward(const double* x, double* y) const {
  std::vector<double> h(hidden);
  for (int j = 0; j < hidden; ++j) {
    double s = b1[j];
    for (int i = 0; i < in; ++i) s += x[i] * w1[static_cast<size_t>(i) * hidden + j];
    h[j] = std::tanh(s);
  }
  for (int k = 0; k < out; ++k) {
    double s = b2[k];
    for (int j = 0; j < hidden; ++j)
      s += h[j] * w2[static_cast<size_t>(j) * out + k];
    switch (out_act) {
      case OutAct::Linear: y[k] = s; break;
      case OutAct::Tanh: y[k] = std::tanh(s); break;
      case OutAct::Sigmoid: y[k] = 1.0 / (1.0 + std::exp(-s)); break;
    }
  }
}

namespace {

NdpEvoParams make_empty_params(const EvoDevConfig& cfg) {
  NdpEvoParams p;
  int e = cfg.embedding_dim;
  p.gnca = EvoMlp(2 * e, cfg.hidden, e, EvoMlp::OutAct::Tanh);
  p.replication = EvoMlp(e, cfg.hidden_repl, 1, EvoMlp::OutAct::Sigmoid);
  p.weight_model = EvoMlp(2 * e, cfg.hidden_weight, 1, EvoMlp::OutAct::Tanh);
  p.seed_embedding.assign(e, 0.0);
  return p;
}

void append(std::vector<double>& flat, const std::vector<double>& v) {
  flat.insert(flat.end(), v.begin(), v.end());
}

void take(const std::vector<double>& flat, size_t& pos, std::vector<double>& v) {
  std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
  pos += v.size();
}

}  // namespace

int evo_param_count(const EvoDevConfig& cfg) {
  NdpEvoParams p = make_empty_params(cfg);
  int n = p.gnca.param_count() + p.replication.param_count() +
          p.weight_model.param_count();
  if (cfg.co_evolve_seed) n += cfg.embedding_dim;
  return n;
}

std::vector<double> pack_evo_params(const NdpEvoParams& p,
                                    const EvoDevConfig& cfg) {
  std::vector<double> flat;
  flat.reserve(evo_param_count(cfg));
  for (const EvoMlp* m : {&p.gnca, &p.replication, &p.weight_model}) {
    append(flat, m->w1);
    append(flat, m->b1);
    append(flat, m->w2);
    append(flat, m->b2);
  }
  if (cfg.co_evolve_seed) append(flat, p.seed_embedding);
  return flat;
}

NdpEvoParams unpack_evo_params(const EvoDevConfig& cfg,
                               const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != evo_param_count(cfg))
    fail(ErrorKind::Contract,
         "unpack_evo_params: flat vector length " + std::to_string(flat.size()) +
             " != param count " + std::to_string(evo_param_count(cfg)));
  NdpEvoParams p = make_empty_params(cfg);
  size_t pos = 0;
  for (EvoMlp* m : {&p.gnca, &p.replication, &p.weight_model}) {
    take(flat, pos, m->w1);
    take(flat, pos, m->b1);
    take(flat, pos, m->w2);
    take(flat, pos, m->b2);
  }
  if (cfg.co_evolve_seed) take(flat, pos, p.seed_embedding);
  return p;
}

void gnca_propagate(DevGraph& g, const NdpEvoParams& p, int steps) {
  int n = g.node_count();
  int e = g.embedding_dim();
  if (n == 0 || steps <= 0) return;
  std::vector<std::vector<double>> next(n, std::vector<double>(e));
  std::vector<double> input(2 * static_cast<size_t>(e));
  for (int step = 0; step < steps; ++step) {
    for (int v = 0; v < n; ++v) {
      const auto& own = g.embedding(v);
      std::copy(own.begin(), own.end(), input.begin());
      std::fill(input.begin() + e, input.end(), 0.0);
      auto nbrs = g.neighbors(v);
      if (!nbrs.empty()) {
        for (int u : nbrs) {
          const auto& eu = g.embedding(u);
          for (int i = 0; i < e; ++i) input[e + i] += eu[i];
        }
        for (int i = 0; i < e; ++i) input[e + i] /= nbrs.size();
      }
      p.gnca.forward(input.data(), next[v].data());
    }
    for (int v = 0; v < n; ++v) g.set_embedding(v, next[v]);
  }
}

int replicate(DevGraph& g, const NdpEvoParams& p, const EvoDevConfig& cfg) {
  int n_before = g.node_count();
  int e = g.embedding_dim();
  std::vector<int> growing;
  for (int v = 0; v < n_before; ++v) {
    double prob = 0.0;
    p.replication.forward(g.embedding(v).data(), &prob);
    if (prob > cfg.replication_threshold) growing.push_back(v);
  }
  // snapshot connectivity before any child is added
  std::vector<std::vector<int>> pre_neighbors(n_before);
  for (int v : growing) pre_neighbors[v] = g.neighbors(v);

  int added = 0;
  for (int v : growing) {
    if (g.node_count() >= cfg.max_nodes) break;
    std::vector<int> attach = pre_neighbors[v];
    attach.push_back(v);
    std::sort(attach.begin(), attach.end());
    std::vector<double> emb(e, 0.0);
    for (int u : attach) {
      const auto& eu = g.embedding(u);
      for (int i = 0; i < e; ++i) emb[i] += eu[i];
    }
    for (int i = 0; i < e; ++i) emb[i] /= attach.size();
    int child_id = g.node_count();
    if (cfg.child_noise > 0.0) {
      Rng noise = make_rng(derive_seed(0xc41d, child_id));
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int i = 0; i < e; ++i) emb[i] += cfg.child_noise * dist(noise);
    }
    int child = g.add_node(NodeRole::Hidden, std::move(emb));
    for (int u : attach) g.add_edge(u, child, 1.0);
    ++added;
  }
  return added;
}

void update_weights(DevGraph& g, const NdpEvoParams& p,
                    const EvoDevConfig& cfg) {
  int n = g.node_count();
  int e = g.embedding_dim();
  std::vector<double> ab(2 * static_cast<size_t>(e));
  std::vector<double> ba(2 * static_cast<size_t>(e));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      bool same_io = (g.role(a) == NodeRole::Input && g.role(b) == NodeRole::Input) ||
                     (g.role(a) == NodeRole::Output && g.role(b) == NodeRole::Output);
      if (cfg.io_pair_exclusion && same_io && !g.has_edge(a, b)) continue;
      const auto& ea = g.embedding(a);
      const auto& eb = g.embedding(b);
      std::copy(ea.begin(), ea.end(), ab.begin());
      std::copy(eb.begin(), eb.end(), ab.begin() + e);
      std::copy(eb.begin(), eb.end(), ba.begin());
      std::copy(ea.begin(), ea.end(), ba.begin() + e);
      double w_ab = 0.0, w_ba = 0.0;
      p.weight_model.forward(ab.data(), &w_ab);
      p.weight_model.forward(ba.data(), &w_ba);
      g.add_edge(a, b, 0.5 * (w_ab + w_ba));
    }
  }
}

int prune(DevGraph& g, double threshold) {
  std::vector<std::pair<int, int>> doomed;
  for (const auto& [src, dst, w] : g.edge_list())
    if (std::abs(w) < threshold) doomed.emplace_back(src, dst);
  for (auto& [src, dst] : doomed) g.remove_edge(src, dst);
  return static_cast<int>(doomed.size());
}

DevelopResult develop(const NdpEvoParams& p, const EvoDevConfig& cfg, int n_in,
                      int n_out, const CycleSnapshotFn& snapshot) {
  if (n_in < 1 || n_out < 1)
    fail(ErrorKind::Contract, "develop: need n_in >= 1 and n_out >= 1");
  if (cfg.cycles < 1) fail(ErrorKind::Contract, "develop: cycles must be >= 1");
  if (cfg.max_nodes < n_in + n_out)
    fail(ErrorKind::Contract, "develop: max_nodes below n_in + n_out");

  DevelopResult res;
  res.graph = DevGraph(GraphMode::Undirected);
  res.graph.add_node(NodeRole::Hidden, p.seed_embedding);
  res.node_counts.push_back(1);
  if (snapshot) snapshot(0, res.graph);

  for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
    int steps = std::max(1, res.graph.diameter());
    gnca_propagate(res.graph, p, steps);
    replicate(res.graph, p, cfg);
    if (cfg.weighted) {
      update_weights(res.graph, p, cfg);
      prune(res.graph, cfg.pruning_threshold);
    }
    res.node_counts.push_back(res.graph.node_count());
    if (snapshot) snapshot(cycle + 1, res.graph);
  }

  int n = res.graph.node_count();
  res.viable = n >= n_in + n_out;
  if (res.viable) {
    for (int v = 0; v < n_in; ++v) res.graph.set_role(v, NodeRole::Input);
    for (int v = n - n_out; v < n; ++v) res.graph.set_role(v, NodeRole::Output);
  }
  return res;
}

std::vector<double> evaluate_recurrent(const DevGraph& g,
                                       const std::vector<double>& obs,
                                       int prop_steps, bool clamp_inputs) {
  int n = g.node_count();
  std::vector<int> inputs, outputs;
  for (int v = 0; v < n; ++v) {
    if (g.role(v) == NodeRole::Input) inputs.push_back(v);
    if (g.role(v) == NodeRole::Output) outputs.push_back(v);
  }
  if (inputs.empty() || outputs.empty())
    fail(ErrorKind::Contract, "evaluate_recurrent: graph has no assigned roles");
  if (obs.size() != inputs.size())
    fail(ErrorKind::Contract, "evaluate_recurrent: observation length " +
                                  std::to_string(obs.size()) + " != " +
                                  std::to_string(inputs.size()) + " inputs");
  if (prop_steps <= 0) prop_steps = std::max(1, g.diameter());

  auto edges = g.edge_list();
  std::vector<double> act(n, 0.0), next(n);
  for (size_t i = 0; i < inputs.size(); ++i) act[inputs[i]] = obs[i];
  std::vector<bool> is_input(n, false);
  for (int v : inputs) is_input[v] = true;

  for (int step = 0; step < prop_steps; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& [a, b, w] : edges) {
      next[a] += w * act[b];
      next[b] += w * act[a];
    }
    for (int v = 0; v < n; ++v) {
      if (is_input[v] && clamp_inputs) continue;
      next[v] = std::tanh(next[v]);
    }
    if (clamp_inputs)
      for (size_t i = 0; i < inputs.size(); ++i) next[inputs[i]] = obs[i];
    act.swap(next);
  }

  std::vector<double> out;
  out.reserve(outputs.size());
  for (int v : outputs) out.push_back(act[v]);
  return out;
}

}  // namespace ndp
