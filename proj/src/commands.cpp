#include "ndp/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ndp/trainers.hpp"
#include "json.hpp"
#include "log.hpp"

namespace ndp {

namespace {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
}

void export_graph(const DevGraph& g, const std::string& stem) {
  write_file(stem + ".json", g.export_json() + "\n");
  write_file(stem + ".dot", g.export_dot());
}

std::string finish_report(const nlohmann::json& j, const std::string& path) {
  std::string text = j.dump(2) + "\n";
  write_file(path, text);
  return text;
}

// mean CartPole return of an evolutionary policy over the given episodes
double eval_evo_cartpole(const DevelopResult& grown, int episodes,
                         std::uint64_t seed, double* stddev = nullptr) {
  Policy policy = [&grown](const std::vector<double>& obs) {
    return evaluate_recurrent(grown.graph, obs);
  };
  double sum = 0.0, sum2 = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = make_rng(derive_seed(seed, 0xeba1, e));
    double r = cartpole_rollout(policy, rng);
    sum += r;
    sum2 += r * r;
  }
  double mean = sum / episodes;
  if (stddev) *stddev = std::sqrt(std::max(0.0, sum2 / episodes - mean * mean));
  return mean;
}

std::string train_evo_run(const RunConfig& cfg) {
  auto res = train_evo(cfg.evo_train, cfg.evo_dev, cfg.task, cfg.seed,
                       cfg.workers);
  const std::string& dir = cfg.output_dir;
  write_history_csv(dir + "/history.csv", res.history);
  save_evo_checkpoint(dir + "/checkpoint.json", cfg.task, cfg.evo_dev,
                      res.best_params);
  export_graph(res.best_develop.graph, dir + "/best_graph");

  nlohmann::json rep;
  rep["variant"] = "evo";
  rep["task"] = cfg.task;
  rep["seed"] = cfg.seed;
  rep["fitness"] = res.best_fitness;
  rep["generations_run"] = res.history.size();
  rep["restarts"] = res.restarts;
  rep["nodes"] = res.best_develop.graph.node_count();
  rep["edges"] = res.best_develop.graph.edge_count();
  rep["viable"] = res.best_develop.viable;
  if (cfg.task == "cartpole" && res.best_develop.viable) {
    double sd = 0.0;
    double mean = eval_evo_cartpole(res.best_develop, 100,
                                    derive_seed(cfg.seed, 0xf1a1), &sd);
    rep["eval_return_100"] = mean;
    rep["eval_return_std"] = sd;
  }
  if (cfg.task == "smallworld") {
    try {
      auto sw = res.best_develop.graph.small_world_metrics(
          cfg.evo_train.smallworld_refs, derive_seed(cfg.seed, 0x5311));
      rep["sigma"] = sw.sigma;
      rep["omega"] = sw.omega;
      rep["clustering"] = sw.c;
      rep["path_length"] = sw.l;
    } catch (const Error& e) {
      rep["metrics_error"] = e.what();
    }
  }
  return finish_report(rep, dir + "/report.json");
}

std::string train_diff_run(const RunConfig& cfg) {
  const std::string& dir = cfg.output_dir;
  DiffTrainResult res;
  nlohmann::json rep;
  rep["variant"] = "diff";
  rep["task"] = cfg.task;
  rep["seed"] = cfg.seed;

  if (cfg.task == "digits") {
    auto [train, test] =
        load_digits_csv(cfg.data_path, derive_seed(cfg.seed, 0xd161));
    res = train_supervised(cfg.supervised, cfg.diff_dev, train, test, cfg.seed);
    rep["accuracy"] = res.final_metric;
    rep["train_rows"] = train.rows();
    rep["test_rows"] = test.rows();
  } else if (cfg.task == "bc") {
    Dataset data = load_trajectories_csv(cfg.data_path);
    TrajectoryManifest manifest = load_trajectory_manifest(cfg.data_path);
    res = train_bc(cfg.bc, cfg.diff_dev, data, cfg.seed);
    rep["mean_return"] = res.final_metric;
    rep["generator_reward"] = manifest.generator_reward;
    rep["return_ratio"] = manifest.generator_reward > 0
                              ? res.final_metric / manifest.generator_reward
                              : 0.0;
  } else {  // cartpole PPO
    res = train_ppo(cfg.ppo, cfg.diff_dev, cfg.seed);
    rep["mean_return"] = res.final_metric;
    double first100 = 0.0, last100 = 0.0;
    int n = static_cast<int>(res.history.size());
    int w = std::min(100, n);
    if (w > 0) {
      for (int i = 0; i < w; ++i) first100 += res.history[i].mean;
      for (int i = n - w; i < n; ++i) last100 += res.history[i].mean;
      first100 /= w;
      last100 /= w;
    }
    rep["first100_mean_return"] = first100;
    rep["last100_mean_return"] = last100;
    rep["rollouts_run"] = n;
  }

  write_history_csv(dir + "/history.csv", res.history);
  save_diff_checkpoint(dir + "/checkpoint.json", cfg.task, cfg.diff_dev,
                       res.params, res.rng_state);
  {  // final grown graph under the evaluation growth seed
    Tape tape;
    Rng rng = make_rng(derive_seed(cfg.seed, 0xe7a1));
    GrownNet net = develop_diff(tape, res.params, cfg.diff_dev, rng);
    export_graph(net.graph, dir + "/best_graph");
    rep["nodes"] = net.graph.node_count();
    rep["edges"] = net.graph.edge_count();
  }
  return finish_report(rep, dir + "/report.json");
}

}  // namespace

std::string cmd_train(const RunConfig& cfg) {
  ensure_dir(cfg.output_dir);
  write_file(cfg.output_dir + "/config.toml", canonical_config(cfg));
  return cfg.is_evo() ? train_evo_run(cfg) : train_diff_run(cfg);
}

std::string cmd_eval(const Checkpoint& ckpt, const std::string& task,
                     int episodes, std::uint64_t seed,
                     const std::string& data_path,
                     const std::string& out_path) {
  if (episodes < 1)
    fail(ErrorKind::Contract, "eval: episodes must be >= 1");
  if (!task.empty() && task != ckpt.task)
    fail(ErrorKind::Contract, "eval: checkpoint was trained for task '" +
                                  ckpt.task + "', not '" + task + "'");

  nlohmann::json rep;
  rep["variant"] = ckpt.variant;
  rep["task"] = ckpt.task;
  rep["episodes"] = episodes;

  if (ckpt.variant == "evo") {
    int n_in = 0, n_out = 0;
    evo_task_arity(ckpt.task, n_in, n_out);
    DevelopResult grown = develop(ckpt.evo_params, ckpt.evo_dev, n_in, n_out);
    rep["viable"] = grown.viable;
    rep["nodes"] = grown.graph.node_count();
    rep["edges"] = grown.graph.edge_count();
    if (ckpt.task == "xor") {
      if (!grown.viable) fail(ErrorKind::Contract, "eval: nonviable policy");
      Policy policy = [&grown](const std::vector<double>& obs) {
        return evaluate_recurrent(grown.graph, obs);
      };
      rep["fitness"] = xor_fitness(policy);
    } else if (ckpt.task == "cartpole") {
      if (!grown.viable) fail(ErrorKind::Contract, "eval: nonviable policy");
      double sd = 0.0;
      rep["mean_return"] = eval_evo_cartpole(grown, episodes, seed, &sd);
      rep["std_return"] = sd;
    } else {  // smallworld
      auto sw = grown.graph.small_world_metrics(10, derive_seed(seed, 0x5311));
      rep["sigma"] = sw.sigma;
      rep["omega"] = sw.omega;
    }
  } else {
    if (ckpt.task == "digits") {
      if (data_path.empty())
        fail(ErrorKind::Contract, "eval: digits needs --data <csv>");
      auto [train, test] = load_digits_csv(data_path, derive_seed(seed, 0xd161));
      rep["accuracy"] = classification_accuracy(ckpt.diff_params, ckpt.diff_dev,
                                                test, derive_seed(seed, 0xe7a1));
      rep["test_rows"] = test.rows();
    } else {  // cartpole / bc policies
      double sd = 0.0;
      rep["mean_return"] =
          eval_cartpole_policy(ckpt.diff_params, ckpt.diff_dev, episodes,
                               derive_seed(seed, 0xe7a1), &sd);
      rep["std_return"] = sd;
    }
  }
  std::string text = rep.dump(2) + "\n";
  if (!out_path.empty()) write_file(out_path, text);
  return text;
}

std::string cmd_grow(const Checkpoint& ckpt, int steps,
                     const std::string& out_dir, std::uint64_t seed) {
  if (steps < 0) fail(ErrorKind::Contract, "grow: steps must be >= 0");
  ensure_dir(out_dir);
  std::vector<std::tuple<int, int, int>> summary;  // step, nodes, edges
  auto snapshot = [&](int step, const DevGraph& g) {
    export_graph(g, out_dir + "/step_" + std::to_string(step));
    summary.emplace_back(step, g.node_count(), g.edge_count());
  };

  if (ckpt.variant == "evo") {
    int n_in = 0, n_out = 0;
    evo_task_arity(ckpt.task, n_in, n_out);
    if (steps == 0) {
      DevGraph g(GraphMode::Undirected);
      g.add_node(NodeRole::Hidden, ckpt.evo_params.seed_embedding);
      snapshot(0, g);
    } else {
      EvoDevConfig dev = ckpt.evo_dev;
      dev.cycles = steps;
      develop(ckpt.evo_params, dev, n_in, n_out, snapshot);
    }
  } else {
    if (steps == 0) {
      snapshot(0, seed_graph(ckpt.diff_dev));
    } else {
      DiffDevConfig dev = ckpt.diff_dev;
      dev.growth_steps = steps;
      Tape tape;
      Rng rng = make_rng(derive_seed(seed, 0xe7a1));
      develop_diff(tape, ckpt.diff_params, dev, rng, nullptr, true, snapshot);
    }
  }

  std::ostringstream csv;
  csv << "step,nodes,edges\n";
  for (const auto& [step, nodes, edges] : summary)
    csv << step << "," << nodes << "," << edges << "\n";
  write_file(out_dir + "/summary.csv", csv.str());

  nlohmann::json rep;
  rep["variant"] = ckpt.variant;
  rep["task"] = ckpt.task;
  rep["steps"] = steps;
  rep["snapshots"] = summary.size();
  rep["final_nodes"] = std::get<1>(summary.back());
  rep["final_edges"] = std::get<2>(summary.back());
  return finish_report(rep, out_dir + "/grow_report.json");
}

std::string cmd_gen_data(const std::string& kind, const std::string& out_path,
                         std::uint64_t seed,
                         const std::string& expert_checkpoint) {
  if (kind != "cartpole-expert")
    fail(ErrorKind::Contract, "gen-data: unknown kind '" + kind + "'");

  DiffDevConfig dev;
  NdpDiffParams params;
  if (!expert_checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint(expert_checkpoint);
    if (ckpt.variant != "diff" || ckpt.task != "cartpole")
      fail(ErrorKind::Contract,
           "gen-data: expert checkpoint must be a diff cartpole policy");
    dev = ckpt.diff_dev;
    params = ckpt.diff_params;
  } else {
    dev.growth_steps = 48;
    dev.embedding_dim = 8;
    dev.n_in = 4;
    dev.n_out = 2;
    dev.critic = true;
    PpoConfig ppo;
    ppo.early_stop_trigger = 480.0;
    ppo.early_stop_target = 475.0;
    log_info("gen-data: training a PPO expert (no checkpoint given)");
    auto res = train_ppo(ppo, dev, seed);
    params = res.params;
  }

  // grow the expert once, then roll out greedy episodes
  Tape tape;
  Rng grow_rng = make_rng(derive_seed(seed, 0xe7a1));
  GrownNet net = develop_diff(tape, params, dev, grow_rng);
  CompiledNet compiled = compile(tape, net, dev);

  Dataset data;
  data.discrete = true;
  const int episodes = 100;
  std::vector<std::vector<double>> rows;
  std::vector<int> actions;
  double total_return = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng env_rng = make_rng(derive_seed(seed, 0x9e4, e));
    CartPoleState s = cartpole::reset(env_rng);
    for (int t = 0; t < cartpole::kMaxSteps; ++t) {
      auto obs = cartpole::observe(s);
      auto out = compiled.forward(obs);
      int action = out.size() > 1 && out[1] > out[0] ? 1 : 0;
      rows.push_back(obs);
      actions.push_back(action);
      auto step = cartpole::step(s, action);
      total_return += step.reward;
      s = step.state;
      if (step.done) break;
    }
  }
  data.inputs = Tensor(static_cast<int>(rows.size()), 4);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < 4; ++j)
      data.inputs.at(static_cast<int>(r), j) = rows[r][j];
  data.labels = std::move(actions);

  TrajectoryManifest manifest;
  manifest.obs_dim = 4;
  manifest.act_dim = 1;
  manifest.discrete = true;
  manifest.generator_reward = total_return / episodes;
  write_trajectories_csv(out_path, data, manifest);

  nlohmann::json rep;
  rep["kind"] = kind;
  rep["rows"] = data.rows();
  rep["episodes"] = episodes;
  rep["generator_reward"] = manifest.generator_reward;
  rep["csv"] = out_path;
  return rep.dump(2) + "\n";
}

}  // namespace ndp
