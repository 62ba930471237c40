#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "ndp/trainers.hpp"

using namespace ndp;

namespace {

EvoDevConfig tiny_evo_dev() {
  EvoDevConfig dev;
  dev.embedding_dim = 2;
  dev.hidden = 3;
  dev.hidden_repl = 2;
  dev.hidden_weight = 2;
  dev.cycles = 3;
  dev.max_nodes = 32;
  return dev;
}

}  // namespace

TEST_CASE("train_evo smoke: one generation, popsize 4") {
  EvoTrainConfig cfg;
  cfg.generations = 1;
  cfg.popsize = 4;
  cfg.rollouts_per_eval = 1;
  auto res = train_evo(cfg, tiny_evo_dev(), "xor", 1, 1);
  CHECK(res.history.size() == 1);
  CHECK(res.best_fitness >= -1000.0);
  CHECK(res.history[0].stddev >= 0.0);
}

TEST_CASE("train_evo is reproducible for a fixed master seed") {
  EvoTrainConfig cfg;
  cfg.generations = 4;
  cfg.popsize = 8;
  cfg.rollouts_per_eval = 2;
  auto a = train_evo(cfg, tiny_evo_dev(), "cartpole", 42, 2);
  auto b = train_evo(cfg, tiny_evo_dev(), "cartpole", 42, 1);  // workers differ
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].best == b.history[i].best);
    CHECK(a.history[i].mean == b.history[i].mean);
    CHECK(a.history[i].nodes == b.history[i].nodes);
  }
  CHECK(pack_evo_params(a.best_params, tiny_evo_dev()) ==
        pack_evo_params(b.best_params, tiny_evo_dev()));
}

TEST_CASE("train_evo task/config arity is validated at startup") {
  EvoTrainConfig cfg;
  cfg.generations = 1;
  cfg.popsize = 4;
  EvoDevConfig dev = tiny_evo_dev();
  dev.max_nodes = 2;  // below cartpole's 4+2
  CHECK_THROWS_AS(train_evo(cfg, dev, "cartpole", 1, 1), Error);
  CHECK_THROWS_AS(train_evo(cfg, tiny_evo_dev(), "nosuch", 1, 1), Error);
}

TEST_CASE("supervised training solves a linearly separable toy set") {
  // two Gaussian blobs in 2-D, labels by the separating axis; 12 growth
  // steps must reach full training accuracy inside 2000 iterations
  Rng rng = make_rng(7);
  const int rows = 60;
  Dataset train;
  train.inputs = Tensor(rows, 2);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int r = 0; r < rows; ++r) {
    int label = r % 2;
    train.inputs.at(r, 0) = (label ? 1.5 : -1.5) + noise(rng);
    train.inputs.at(r, 1) = noise(rng);
    train.labels.push_back(label);
  }
  DiffDevConfig dev;
  dev.n_in = 2;
  dev.n_out = 2;
  dev.embedding_dim = 6;
  dev.growth_steps = 12;
  dev.msg_hidden = 8;
  dev.edge_hidden = 8;
  SupervisedConfig cfg;
  cfg.iterations = 2000;
  cfg.batch_size = 16;
  auto res = train_supervised(cfg, dev, train, train, 3);
  CHECK(res.final_metric == doctest::Approx(1.0));
  CHECK(res.history.size() > 1);
}

TEST_CASE("first digits-scale batch loss starts near ln(num_classes)") {
  // uniform-logit baseline: ln 10 within +-30%
  Rng rng = make_rng(9);
  Dataset train;
  const int rows = 64;
  train.inputs = Tensor(rows, 8);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < 8; ++j) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      train.inputs.at(r, j) = unit(rng);
    }
    train.labels.push_back(r % 10);
  }
  DiffDevConfig dev;
  dev.n_in = 8;
  dev.n_out = 10;
  dev.embedding_dim = 6;
  dev.growth_steps = 4;
  SupervisedConfig cfg;
  cfg.iterations = 1;
  auto res = train_supervised(cfg, dev, train, train, 1);
  double first_loss = res.history.front().mean;
  CHECK(first_loss > std::log(10.0) * 0.7);
  CHECK(first_loss < std::log(10.0) * 1.3);
}

TEST_CASE("behavioral cloning loss decreases on rule-based expert data") {
  // synthetic expert: push toward the pole's lean; the 100-step moving
  // average of the loss over the first 500 iterations must drop
  Rng rng = make_rng(11);
  const int rows = 400;
  Dataset data;
  data.discrete = true;
  data.inputs = Tensor(rows, 4);
  std::normal_distribution<double> obs_dist(0.0, 0.5);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < 4; ++j) data.inputs.at(r, j) = obs_dist(rng);
    data.labels.push_back(data.inputs.at(r, 2) + 0.3 * data.inputs.at(r, 3) > 0
                              ? 1
                              : 0);
  }
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  dev.embedding_dim = 6;
  dev.growth_steps = 8;
  BcConfig cfg;
  cfg.iterations = 500;
  cfg.learning_rate = 0.003;  // toy-scale budget wants a faster pace
  cfg.eval_episodes = 2;
  auto res = train_bc(cfg, dev, data, 5);
  // history rows land every 100 iterations: compare early vs late averages
  REQUIRE(res.history.size() >= 5);
  double early = res.history[1].mean;  // iteration 100
  double late = res.history.back().mean;
  CHECK(late < early);
}

TEST_CASE("bc rejects empty datasets and arity mismatches") {
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  BcConfig cfg;
  Dataset empty;
  empty.inputs = Tensor(0, 4);
  CHECK_THROWS_AS(train_bc(cfg, dev, empty, 1), Error);
  Dataset bad;
  bad.inputs = Tensor(4, 3);
  bad.labels = {0, 1, 0, 1};
  CHECK_THROWS_AS(train_bc(cfg, dev, bad, 1), Error);
}

TEST_CASE("ppo requires the critic node") {
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  dev.critic = false;
  PpoConfig cfg;
  CHECK_THROWS_AS(train_ppo(cfg, dev, 1), Error);
}

TEST_CASE("ppo smoke run goes through updates and history") {
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  dev.critic = true;
  dev.embedding_dim = 5;
  dev.growth_steps = 4;
  dev.msg_hidden = 6;
  dev.edge_hidden = 6;
  PpoConfig cfg;
  cfg.total_rollouts = 3;
  cfg.updates_per_rollout = 2;
  cfg.eval_episodes = 2;
  cfg.eval_every = 0;
  auto res = train_ppo(cfg, dev, 9);
  CHECK(res.history.size() == 3);
  CHECK(res.final_metric >= 1.0);
  for (const auto& row : res.history) CHECK(row.mean >= 1.0);
}

TEST_CASE("ppo ratio is exactly 1 when old and new parameters coincide") {
  // clip identity: with identical parameters and a replayed trace, the new
  // log-probs reproduce the collection-time log-probs
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  dev.critic = true;
  dev.embedding_dim = 5;
  dev.growth_steps = 6;
  Rng rng = make_rng(13);
  NdpDiffParams p = NdpDiffParams::init(dev, rng);

  Tape tape;
  Rng grng = make_rng(14);
  GrownNet net = develop_diff(tape, p, dev, grng);
  CompiledNet compiled = compile(tape, net, dev);

  // collect a few steps
  Rng env_rng = make_rng(15), sample_rng = make_rng(16);
  CartPoleState s = cartpole::reset(env_rng);
  Tensor obs(5, 4);
  std::vector<int> actions;
  std::vector<double> logp_old;
  for (int t = 0; t < 5; ++t) {
    auto o = cartpole::observe(s);
    for (int j = 0; j < 4; ++j) obs.at(t, j) = o[j];
    auto logits = compiled.forward(o);
    double mx = std::max(logits[0], logits[1]);
    double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
    std::vector<double> probs = {std::exp(logits[0] - mx) / z,
                                 std::exp(logits[1] - mx) / z};
    int a = sample_categorical(Tensor::col(probs), sample_rng);
    actions.push_back(a);
    logp_old.push_back(std::log(probs[a]));
    s = cartpole::step(s, a).state;
  }

  Tape t2;
  Rng dummy = make_rng(0);
  GrownNet replay = develop_diff(t2, p, dev, dummy, &net.trace);
  auto fw = forward_dag(t2, replay, dev, obs);
  Value logp = t2.pick(t2.log_softmax(fw.logits), actions);
  Value ratio = t2.exp(t2.sub(logp, t2.constant(Tensor::col(logp_old))));
  const Tensor& r = t2.val(ratio);
  for (int t = 0; t < 5; ++t)
    CHECK(r.at(t, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a huge entropy bonus keeps the policy near uniform") {
  DiffDevConfig dev;
  dev.n_in = 4;
  dev.n_out = 2;
  dev.critic = true;
  dev.embedding_dim = 5;
  dev.growth_steps = 4;
  PpoConfig cfg;
  cfg.total_rollouts = 20;
  cfg.updates_per_rollout = 5;
  cfg.entropy_coef = 10.0;
  cfg.eval_every = 0;
  cfg.eval_episodes = 1;
  auto res = train_ppo(cfg, dev, 21);

  // inspect the trained policy's action distribution on fresh observations
  NdpDiffParams p = res.params;
  Tape tape;
  Rng grng = make_rng(22);
  GrownNet net = develop_diff(tape, p, dev, grng);
  CompiledNet compiled = compile(tape, net, dev);
  Rng env_rng = make_rng(23);
  CartPoleState s = cartpole::reset(env_rng);
  for (int t = 0; t < 10; ++t) {
    auto logits = compiled.forward(cartpole::observe(s));
    double gap = std::abs(logits[0] - logits[1]);
    CHECK(gap < 0.2);  // near-uniform softmax
    s = cartpole::integrate(s, t % 2 ? 10.0 : -10.0);
  }
}
