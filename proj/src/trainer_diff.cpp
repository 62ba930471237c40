#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ndp/trainers.hpp"
#include "log.hpp"

namespace ndp {

namespace {

// shared-rule nets behave like deep recurrences; clip by global norm
constexpr double kGradClipNorm = 5.0;

std::vector<Tensor> gather_grads(const Tape& tape, const GrownNet& net,
                                 const NdpDiffParams& p) {
  std::vector<Tensor> grads;
  auto tensors = p.tensors();
  for (size_t i = 0; i < net.params.leaves.size(); ++i) {
    if (tape.has_grad(net.params.leaves[i]))
      grads.push_back(tape.grad(net.params.leaves[i]));
    else
      grads.push_back(Tensor(tensors[i]->rows, tensors[i]->cols));
  }
  double norm2 = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.data) norm2 += x * x;
  if (norm2 > kGradClipNorm * kGradClipNorm) {
    double scale = kGradClipNorm / std::sqrt(norm2);
    for (Tensor& g : grads)
      for (double& x : g.data) x *= scale;
  }
  return grads;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

double classification_accuracy(const NdpDiffParams& params,
                               const DiffDevConfig& dev, const Dataset& data,
                               std::uint64_t eval_seed) {
  Tape tape;
  Rng grow_rng = make_rng(eval_seed);
  GrownNet net = develop_diff(tape, params, dev, grow_rng);
  auto fw = forward_dag(tape, net, dev, data.inputs);
  const Tensor& logits = tape.val(fw.logits);
  int hits = 0;
  for (int r = 0; r < logits.rows; ++r) {
    int arg = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (logits.at(r, c) > logits.at(r, arg)) arg = c;
    if (arg == data.labels[r]) ++hits;
  }
  return logits.rows ? static_cast<double>(hits) / logits.rows : 0.0;
}

DiffTrainResult train_supervised(const SupervisedConfig& cfg,
                                 const DiffDevConfig& dev, const Dataset& train,
                                 const Dataset& test, std::uint64_t seed) {
  if (cfg.batch_size < 1)
    fail(ErrorKind::Contract, "train_supervised: batch_size must be >= 1");
  if (train.rows() == 0)
    fail(ErrorKind::Contract, "train_supervised: empty training set");
  if (train.inputs.cols != dev.n_in)
    fail(ErrorKind::Contract, "train_supervised: dataset width " +
                                  std::to_string(train.inputs.cols) +
                                  " != n_in " + std::to_string(dev.n_in));

  Rng init_rng = make_rng(derive_seed(seed, 0x1217));
  NdpDiffParams params = NdpDiffParams::init(dev, init_rng);
  AdamState adam(cfg.learning_rate);
  Rng batch_rng = make_rng(derive_seed(seed, 0xba7c4));
  std::uniform_int_distribution<int> pick_row(0, train.rows() - 1);

  DiffTrainResult res;
  Tape tape;
  double best_loss = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.iterations; ++it) {
    tape.reset();
    Rng grow_rng = make_rng(derive_seed(seed, 0x960, it));
    GrownNet net = develop_diff(tape, params, dev, grow_rng);

    Tensor batch(cfg.batch_size, dev.n_in);
    std::vector<int> labels(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      int r = pick_row(batch_rng);
      for (int j = 0; j < dev.n_in; ++j) batch.at(b, j) = train.inputs.at(r, j);
      labels[b] = train.labels[r];
    }

    auto fw = forward_dag(tape, net, dev, batch);
    Value loss = tape.softmax_cross_entropy(fw.logits, labels);
    double loss_val = tape.val(loss).item();
    tape.backward(loss);
    adam.step(params.tensors(), gather_grads(tape, net, params));

    best_loss = std::min(best_loss, loss_val);
    if (it % 100 == 0 || it == cfg.iterations - 1) {
      res.history.push_back({it, best_loss, loss_val, 0.0,
                             net.graph.node_count(), net.graph.edge_count()});
      if (it % 1000 == 0)
        log_info("iter " + std::to_string(it) + " loss " +
                 std::to_string(loss_val));
    }
  }

  res.params = params;
  res.rng_state = rng_to_string(batch_rng);
  res.final_metric =
      classification_accuracy(params, dev, test, derive_seed(seed, 0xe7a1));
  return res;
}

double eval_cartpole_policy(const NdpDiffParams& params,
                            const DiffDevConfig& dev, int episodes,
                            std::uint64_t eval_seed, double* stddev) {
  Tape tape;
  Rng grow_rng = make_rng(eval_seed);
  GrownNet net = develop_diff(tape, params, dev, grow_rng);
  CompiledNet compiled = compile(tape, net, dev);
  Policy policy = [&compiled](const std::vector<double>& obs) {
    return compiled.forward(obs);
  };
  double sum = 0.0, sum2 = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng env_rng = make_rng(derive_seed(eval_seed, 0xe9, e));
    double ret = cartpole_rollout(policy, env_rng);
    sum += ret;
    sum2 += ret * ret;
  }
  double mean = sum / episodes;
  if (stddev)
    *stddev = std::sqrt(std::max(0.0, sum2 / episodes - mean * mean));
  return mean;
}

DiffTrainResult train_bc(const BcConfig& cfg, const DiffDevConfig& dev,
                         const Dataset& trajectories, std::uint64_t seed) {
  if (trajectories.rows() == 0)
    fail(ErrorKind::Contract, "train_bc: empty trajectory dataset");
  if (trajectories.inputs.cols != dev.n_in)
    fail(ErrorKind::Contract, "train_bc: observation width mismatch");
  if (trajectories.discrete) {
    for (int a : trajectories.labels)
      if (a >= dev.n_out)
        fail(ErrorKind::Contract, "train_bc: action label outside n_out");
  } else if (trajectories.actions.cols != dev.n_out) {
    fail(ErrorKind::Contract, "train_bc: action width mismatch");
  }

  Rng init_rng = make_rng(derive_seed(seed, 0x1217));
  NdpDiffParams params = NdpDiffParams::init(dev, init_rng);
  AdamState adam(cfg.learning_rate);
  Rng batch_rng = make_rng(derive_seed(seed, 0xba7c4));
  std::uniform_int_distribution<int> pick_row(0, trajectories.rows() - 1);

  DiffTrainResult res;
  Tape tape;
  double best_loss = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.iterations; ++it) {
    tape.reset();
    Rng grow_rng = make_rng(derive_seed(seed, 0x960, it));
    GrownNet net = develop_diff(tape, params, dev, grow_rng);

    Tensor batch(cfg.batch_size, dev.n_in);
    std::vector<int> labels(cfg.batch_size);
    Tensor targets(cfg.batch_size, trajectories.discrete ? 1 : dev.n_out);
    for (int b = 0; b < cfg.batch_size; ++b) {
      int r = pick_row(batch_rng);
      for (int j = 0; j < dev.n_in; ++j)
        batch.at(b, j) = trajectories.inputs.at(r, j);
      if (trajectories.discrete)
        labels[b] = trajectories.labels[r];
      else
        for (int j = 0; j < dev.n_out; ++j)
          targets.at(b, j) = trajectories.actions.at(r, j);
    }

    auto fw = forward_dag(tape, net, dev, batch);
    Value loss = trajectories.discrete
                     ? tape.softmax_cross_entropy(fw.logits, labels)
                     : tape.mse(fw.logits, tape.constant(targets));
    double loss_val = tape.val(loss).item();
    tape.backward(loss);
    adam.step(params.tensors(), gather_grads(tape, net, params));

    best_loss = std::min(best_loss, loss_val);
    if (it % 100 == 0 || it == cfg.iterations - 1)
      res.history.push_back({it, best_loss, loss_val, 0.0,
                             net.graph.node_count(), net.graph.edge_count()});
    if (it % 1000 == 0)
      log_info("bc iter " + std::to_string(it) + " loss " +
               std::to_string(loss_val));
  }

  res.params = params;
  res.rng_state = rng_to_string(batch_rng);
  res.final_metric = eval_cartpole_policy(params, dev, cfg.eval_episodes,
                                          derive_seed(seed, 0xe7a1));
  return res;
}

// ---------------------------------------------------------------------------
// PPO

namespace {

struct Episode {
  Tensor obs;          // T x n_in
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> logp_old;
  std::vector<double> values;
  double total_reward = 0.0;
  int length() const { return static_cast<int>(actions.size()); }
};

Episode collect_episode(const CompiledNet& net, Rng& env_rng, Rng& sample_rng) {
  Episode ep;
  std::vector<std::vector<double>> obs_rows;
  CartPoleState s = cartpole::reset(env_rng);
  for (int t = 0; t < cartpole::kMaxSteps; ++t) {
    auto obs = cartpole::observe(s);
    double value = 0.0;
    auto logits = net.forward(obs, &value);
    // softmax sampling during collection
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      p[i] = std::exp(logits[i] - mx);
      z += p[i];
    }
    for (auto& x : p) x /= z;
    int action = sample_categorical(Tensor::col(p), sample_rng);

    obs_rows.push_back(obs);
    ep.actions.push_back(action);
    ep.logp_old.push_back(std::log(std::max(p[action], 1e-300)));
    ep.values.push_back(value);

    auto step = cartpole::step(s, action);
    ep.rewards.push_back(step.reward);
    ep.total_reward += step.reward;
    s = step.state;
    if (step.done) break;
  }
  int t_len = static_cast<int>(obs_rows.size());
  ep.obs = Tensor(t_len, static_cast<int>(obs_rows[0].size()));
  for (int t = 0; t < t_len; ++t)
    for (size_t j = 0; j < obs_rows[t].size(); ++j)
      ep.obs.at(t, static_cast<int>(j)) = obs_rows[t][j];
  return ep;
}

void compute_gae(const Episode& ep, double discount, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns) {
  int t_len = ep.length();
  advantages.assign(t_len, 0.0);
  returns.assign(t_len, 0.0);
  double gae = 0.0;
  for (int t = t_len - 1; t >= 0; --t) {
    double next_value = t + 1 < t_len ? ep.values[t + 1] : 0.0;
    double delta = ep.rewards[t] + discount * next_value - ep.values[t];
    gae = delta + discount * lambda * gae;
    advantages[t] = gae;
    returns[t] = advantages[t] + ep.values[t];
  }
}

}  // namespace

DiffTrainResult train_ppo(const PpoConfig& cfg, const DiffDevConfig& dev,
                          std::uint64_t seed) {
  if (!dev.critic)
    fail(ErrorKind::Contract, "train_ppo: config must enable the critic node");
  if (cfg.clip_epsilon <= 0.0 || cfg.clip_epsilon >= 1.0)
    fail(ErrorKind::Contract, "train_ppo: clip_epsilon must be in (0,1)");
  if (cfg.discount < 0.0 || cfg.discount > 1.0)
    fail(ErrorKind::Contract, "train_ppo: discount must be in [0,1]");

  Rng init_rng = make_rng(derive_seed(seed, 0x1217));
  NdpDiffParams params = NdpDiffParams::init(dev, init_rng);
  AdamState adam(cfg.learning_rate);
  Rng env_rng = make_rng(derive_seed(seed, 0xe45));
  Rng sample_rng = make_rng(derive_seed(seed, 0x5a3));

  DiffTrainResult res;
  Tape tape;
  std::vector<double> recent_returns;
  double best_return = 0.0;
  auto started = std::chrono::steady_clock::now();

  for (long rollout = 0; rollout < cfg.total_rollouts; ++rollout) {
    if (cfg.max_seconds > 0.0) {
      std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - started;
      if (elapsed.count() > cfg.max_seconds) {
        log_warn("ppo: wall-clock budget exhausted at rollout " +
                 std::to_string(rollout));
        break;
      }
    }

    tape.reset();
    Rng grow_rng = make_rng(derive_seed(seed, 0x960, rollout));
    GrownNet net = develop_diff(tape, params, dev, grow_rng);
    CompiledNet compiled = compile(tape, net, dev);
    Episode ep = collect_episode(compiled, env_rng, sample_rng);
    for (auto& r : ep.rewards) r *= cfg.reward_scale;

    std::vector<double> advantages, returns;
    compute_gae(ep, cfg.discount, cfg.gae_lambda, advantages, returns);
    if (cfg.normalize_advantages && ep.length() > 1) {
      double mean = 0.0, var = 0.0;
      for (double a : advantages) mean += a;
      mean /= advantages.size();
      for (double a : advantages) var += (a - mean) * (a - mean);
      var /= advantages.size();
      double inv = 1.0 / (std::sqrt(var) + 1e-8);
      for (auto& a : advantages) a = (a - mean) * inv;
    }

    GrowthTrace trace = net.trace;
    Rng dummy_rng = make_rng(0);
    for (int epoch = 0; epoch < cfg.updates_per_rollout; ++epoch) {
      tape.reset();
      GrownNet upd = develop_diff(tape, params, dev, dummy_rng, &trace);
      auto fw = forward_dag(tape, upd, dev, ep.obs);

      Value logp = tape.pick(tape.log_softmax(fw.logits), ep.actions);
      Value ratio =
          tape.exp(tape.sub(logp, tape.constant(Tensor::col(ep.logp_old))));
      Value adv = tape.constant(Tensor::col(advantages));
      Value surr = tape.min_elem(
          tape.mul(ratio, adv),
          tape.mul(tape.clamp(ratio, 1.0 - cfg.clip_epsilon,
                              1.0 + cfg.clip_epsilon),
                   adv));
      Value policy_loss = tape.scale(tape.mean_all(surr), -1.0);
      Value value_loss = tape.mse(fw.critic, tape.constant(Tensor::col(returns)));
      Value ls = tape.log_softmax(fw.logits);
      Value entropy = tape.scale(tape.mean_all(tape.mul(tape.exp(ls), ls)),
                                 -static_cast<double>(dev.n_out));
      Value loss =
          tape.add(tape.add(policy_loss, tape.scale(value_loss, cfg.value_loss_coef)),
                   tape.scale(entropy, -cfg.entropy_coef));

      // the clipped objective bounds every per-sample term
      const Tensor& sv = tape.val(surr);
      for (int t = 0; t < sv.rows; ++t) {
        double hi = std::max((1.0 - cfg.clip_epsilon) * advantages[t],
                             (1.0 + cfg.clip_epsilon) * advantages[t]);
        if (sv.at(t, 0) > hi + 1e-9)
          fail(ErrorKind::Contract, "ppo: surrogate exceeded its clip bound");
      }

      if (epoch == 0 && rollout % 100 == 0)
        log_debug("ppo components: policy " +
                  std::to_string(tape.val(policy_loss).item()) + " value " +
                  std::to_string(tape.val(value_loss).item()) + " entropy " +
                  std::to_string(tape.val(entropy).item()) + " T " +
                  std::to_string(ep.length()));
      tape.backward(loss);
      adam.step(params.tensors(), gather_grads(tape, upd, params));
    }

    recent_returns.push_back(ep.total_reward);
    double window_mean = 0.0;
    int window = std::min<int>(100, static_cast<int>(recent_returns.size()));
    for (int i = 0; i < window; ++i)
      window_mean += recent_returns[recent_returns.size() - 1 - i];
    window_mean /= window;
    best_return = std::max(best_return, window_mean);
    res.history.push_back({rollout, best_return, ep.total_reward, 0.0,
                           net.graph.node_count(), net.graph.edge_count()});

    if (rollout % 100 == 0)
      log_info("ppo rollout " + std::to_string(rollout) + " return " +
               std::to_string(ep.total_reward) + " avg100 " +
               std::to_string(window_mean));

    if (cfg.eval_every > 0 && rollout > 0 && rollout % cfg.eval_every == 0 &&
        window_mean >= cfg.early_stop_trigger) {
      double eval = eval_cartpole_policy(params, dev, cfg.eval_episodes,
                                         derive_seed(seed, 0xe7a1));
      log_info("ppo eval at rollout " + std::to_string(rollout) + ": " +
               std::to_string(eval));
      if (eval >= cfg.early_stop_target) break;
    }
  }

  res.params = params;
  res.rng_state = rng_to_string(sample_rng);
  res.final_metric = eval_cartpole_policy(params, dev, cfg.eval_episodes,
                                          derive_seed(seed, 0xe7a1));
  return res;
}

}  // namespace ndp
