#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ndp/envs.hpp"
#include "ndp/ndp_diff.hpp"
#include "ndp/ndp_evo.hpp"

namespace ndp {

struct HistoryRow {
  long iter = 0;
  double best = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int nodes = 0;
  int edges = 0;
};

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows);

// ---------------------------------------------------------------------------
// Evolutionary training (CMA-ES over the flat genome)

struct EvoTrainConfig {
  long generations = 1000;
  int popsize = 512;
  double sigma0 = 0.1;
  int rollouts_per_eval = 8;
  double penalty_nonviable = -1000.0;
  // training stops early once the generation best reaches this (maximized)
  double target_fitness = std::numeric_limits<double>::infinity();
  bool restart_enabled = true;
  int smallworld_refs = 10;  // random references per metric evaluation
  double max_seconds = 0.0;  // wall-clock budget, 0 = unlimited
};

struct EvoTrainResult {
  NdpEvoParams best_params;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<HistoryRow> history;
  DevelopResult best_develop;
  int restarts = 0;
};

// Task ids: "xor" (2->1), "cartpole" (4->2), "smallworld" (topology only).
// Fitness evaluation is parallel over the population; results are gathered
// by candidate index so worker scheduling never affects the outcome.
EvoTrainResult train_evo(const EvoTrainConfig& cfg, const EvoDevConfig& dev,
                         const std::string& task, std::uint64_t seed,
                         int workers);

// Arity by task id; fitness of a single genome (used by train_evo and the
// eval command).
void evo_task_arity(const std::string& task, int& n_in, int& n_out);
double evo_fitness(const std::string& task, const DevelopResult& grown,
                   const EvoTrainConfig& cfg, std::uint64_t rollout_seed);

// ---------------------------------------------------------------------------
// Gradient-based training

struct SupervisedConfig {
  double learning_rate = 0.001;
  int batch_size = 32;
  long iterations = 10000;
};

struct BcConfig {
  double learning_rate = 0.0001;
  int batch_size = 32;
  long iterations = 10000;
  int eval_episodes = 10;
};

struct PpoConfig {
  double learning_rate = 0.0005;
  double entropy_coef = 0.001;
  int updates_per_rollout = 30;
  double clip_epsilon = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  long total_rollouts = 10000;
  double value_loss_coef = 0.5;
  bool normalize_advantages = true;
  // rewards are scaled before GAE so critic targets stay O(1); advantages
  // are normalized afterwards, so the policy objective is unaffected
  double reward_scale = 0.01;
  int eval_episodes = 10;
  // early exit: once the recent return average crosses the trigger, confirm
  // with a greedy evaluation and stop at or above the target
  double early_stop_trigger = 475.0;
  double early_stop_target = 475.0;
  int eval_every = 50;
  double max_seconds = 0.0;  // wall-clock budget, 0 = unlimited
};

struct DiffTrainResult {
  NdpDiffParams params;
  double final_metric = 0.0;  // accuracy or mean return
  std::vector<HistoryRow> history;
  std::string rng_state;
};

// Fresh growth trace each iteration, softmax cross-entropy on batches, Adam.
// The reported accuracy uses a growth trace drawn with the evaluation seed.
DiffTrainResult train_supervised(const SupervisedConfig& cfg,
                                 const DiffDevConfig& dev, const Dataset& train,
                                 const Dataset& test, std::uint64_t seed);

double classification_accuracy(const NdpDiffParams& params,
                               const DiffDevConfig& dev, const Dataset& data,
                               std::uint64_t eval_seed);

// Behavioral cloning on a trajectory dataset; evaluation is the mean CartPole
// return over eval_episodes greedy episodes.
DiffTrainResult train_bc(const BcConfig& cfg, const DiffDevConfig& dev,
                         const Dataset& trajectories, std::uint64_t seed);

// PPO with the critic read from the dedicated critic node. One grown network
// per rollout; the recorded growth trace is replayed for every update epoch.
DiffTrainResult train_ppo(const PpoConfig& cfg, const DiffDevConfig& dev,
                          std::uint64_t seed);

// Mean (and optional stddev) CartPole return of a grown policy over episodes;
// greedy action selection, fresh growth trace from eval_seed.
double eval_cartpole_policy(const NdpDiffParams& params,
                            const DiffDevConfig& dev, int episodes,
                            std::uint64_t eval_seed, double* stddev = nullptr);

}  // namespace ndp
