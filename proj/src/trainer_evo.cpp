#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "ndp/cmaes.hpp"
#include "ndp/trainers.hpp"
#include "log.hpp"

namespace ndp {

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "generation_or_iter,best,mean,std,nodes,edges\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.iter << "," << r.best << "," << r.mean << "," << r.stddev << ","
        << r.nodes << "," << r.edges << "\n";
}

void evo_task_arity(const std::string& task, int& n_in, int& n_out) {
  if (task == "xor") {
    n_in = 2;
    n_out = 1;
  } else if (task == "cartpole") {
    n_in = 4;
    n_out = 2;
  } else if (task == "smallworld") {
    n_in = 1;
    n_out = 1;
  } else {
    fail(ErrorKind::Contract, "unknown evolutionary task '" + task + "'");
  }
}

double evo_fitness(const std::string& task, const DevelopResult& grown,
                   const EvoTrainConfig& cfg, std::uint64_t rollout_seed) {
  if (task == "smallworld")
    return smallworld_fitness(grown.graph, cfg.smallworld_refs, rollout_seed,
                              cfg.penalty_nonviable);
  if (!grown.viable) return cfg.penalty_nonviable;

  Policy policy = [&grown](const std::vector<double>& obs) {
    return evaluate_recurrent(grown.graph, obs);
  };
  if (task == "xor") return xor_fitness(policy);
  if (task == "cartpole") {
    double total = 0.0;
    for (int r = 0; r < cfg.rollouts_per_eval; ++r) {
      Rng rng = make_rng(derive_seed(rollout_seed, r));
      total += cartpole_rollout(policy, rng);
    }
    return total / cfg.rollouts_per_eval;
  }
  fail(ErrorKind::Contract, "unknown evolutionary task '" + task + "'");
}

namespace {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

EvoTrainResult train_evo(const EvoTrainConfig& cfg, const EvoDevConfig& dev,
                         const std::string& task, std::uint64_t seed,
                         int workers) {
  if (cfg.popsize < 4) fail(ErrorKind::Contract, "train_evo: popsize must be >= 4");
  if (cfg.generations < 1)
    fail(ErrorKind::Contract, "train_evo: generations must be >= 1");
  int n_in = 0, n_out = 0;
  evo_task_arity(task, n_in, n_out);
  if (dev.max_nodes < n_in + n_out)
    fail(ErrorKind::Contract, "train_evo: max_nodes below task arity");
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.popsize));

  int dim = evo_param_count(dev);
  // when the seed embedding is not co-evolved, draw it once per run
  std::vector<double> fixed_seed_embedding(dev.embedding_dim, 0.0);
  {
    Rng rng = make_rng(derive_seed(seed, 0x5eed));
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& x : fixed_seed_embedding) x = dist(rng);
  }
  auto unpack = [&](const std::vector<double>& flat) {
    NdpEvoParams p = unpack_evo_params(dev, flat);
    if (!dev.co_evolve_seed) p.seed_embedding = fixed_seed_embedding;
    return p;
  };

  EvoTrainResult res;
  Cmaes es(dim, std::vector<double>(dim, 0.0), cfg.sigma0, cfg.popsize);
  Rng ask_rng = make_rng(derive_seed(seed, 0xa5c));
  std::vector<double> best_history;
  auto started = std::chrono::steady_clock::now();

  for (long gen = 0; gen < cfg.generations; ++gen) {
    if (cfg.max_seconds > 0.0) {
      std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - started;
      if (elapsed.count() > cfg.max_seconds) {
        log_warn("wall-clock budget exhausted at generation " +
                 std::to_string(gen));
        break;
      }
    }
    auto candidates = es.ask(ask_rng);
    std::vector<double> fitness(cfg.popsize);
    std::vector<int> sizes(cfg.popsize), edge_counts(cfg.popsize);
    parallel_for(cfg.popsize, workers, [&](int k) {
      DevelopResult grown = develop(unpack(candidates[k]), dev, n_in, n_out);
      fitness[k] =
          evo_fitness(task, grown, cfg, derive_seed(seed, gen, k, 0xf17));
      sizes[k] = grown.graph.node_count();
      edge_counts[k] = grown.graph.edge_count();
    });

    int gen_best = 0;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < cfg.popsize; ++k) {
      if (fitness[k] > fitness[gen_best]) gen_best = k;
      sum += fitness[k];
      sum2 += fitness[k] * fitness[k];
    }
    double mean = sum / cfg.popsize;
    double var = std::max(0.0, sum2 / cfg.popsize - mean * mean);
    res.history.push_back({gen, fitness[gen_best], mean, std::sqrt(var),
                           sizes[gen_best], edge_counts[gen_best]});

    if (fitness[gen_best] > res.best_fitness) {
      res.best_fitness = fitness[gen_best];
      res.best_params = unpack(candidates[gen_best]);
    }
    best_history.push_back(-res.best_fitness);  // minimization view

    if (gen % 25 == 0)
      log_info("gen " + std::to_string(gen) + " best " +
               std::to_string(fitness[gen_best]) + " overall " +
               std::to_string(res.best_fitness));

    if (res.best_fitness >= cfg.target_fitness) {
      log_info("target fitness reached at generation " + std::to_string(gen));
      break;
    }

    std::vector<double> neg(fitness.size());
    for (size_t i = 0; i < fitness.size(); ++i) neg[i] = -fitness[i];
    es.tell(candidates, neg);

    if (cfg.restart_enabled && es.should_restart(best_history)) {
      ++res.restarts;
      log_info("restart " + std::to_string(res.restarts) + " at generation " +
               std::to_string(gen));
      es = Cmaes(dim, std::vector<double>(dim, 0.0), cfg.sigma0, cfg.popsize);
      ask_rng = make_rng(derive_seed(seed, 0xa5c, res.restarts));
      best_history.clear();
    }
  }

  res.best_develop = develop(res.best_params, dev, n_in, n_out);
  return res;
}

}  // namespace ndp
