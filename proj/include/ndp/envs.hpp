#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ndp/graph.hpp"
#include "ndp/rng.hpp"
#include "ndp/tensor.hpp"

namespace ndp {

// A policy maps an observation to one output value per output node.
using Policy = std::function<std::vector<double>(const std::vector<double>&)>;

struct FitnessSpec {
  std::string task;
  int rollouts_per_eval = 8;
  double penalty_nonviable = -1000.0;
};

// ---------------------------------------------------------------------------
// CartPole

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  int steps = 0;
};

struct CartPoleStep {
  CartPoleState state;
  double reward = 0.0;
  bool done = false;
};

namespace cartpole {
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kHalfLength = 0.5;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;
constexpr double kXLimit = 2.4;
constexpr int kMaxSteps = 500;
double theta_limit();  // 12 degrees in radians

CartPoleState reset(Rng& rng);  // uniform +-0.05 on all four state values
bool terminal(const CartPoleState& s);
// One semi-implicit Euler update under an arbitrary applied force; no
// termination or reward logic.
CartPoleState integrate(const CartPoleState& s, double force);
// Semi-implicit Euler step of the standard dynamics; action 0 pushes left,
// 1 pushes right. Reward is 1 per step taken.
CartPoleStep step(const CartPoleState& s, int action);
std::vector<double> observe(const CartPoleState& s);
}  // namespace cartpole

// One CartPole episode under argmax action selection; returns the episode
// return (<= max_steps).
double cartpole_rollout(const Policy& policy, Rng& rng,
                        int max_steps = cartpole::kMaxSteps);

// ---------------------------------------------------------------------------
// Task objectives

// Negative mean squared error over the four XOR cases; outputs are mapped
// from (-1,1) to [0,1] before comparison. 0 is perfect.
double xor_fitness(const Policy& policy);

// sigma - |omega| for connected graphs with >= 10 nodes, else the penalty.
double smallworld_fitness(const DevGraph& g, int n_random_refs,
                          std::uint64_t rng_seed, double penalty);

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  Tensor inputs;            // rows x obs_dim
  std::vector<int> labels;  // discrete targets (empty when continuous)
  Tensor actions;           // continuous targets (rows x act_dim)
  bool discrete = true;
  int rows() const { return inputs.rows; }
};

struct TrajectoryManifest {
  int obs_dim = 0;
  int act_dim = 0;
  bool discrete = true;
  double generator_reward = 0.0;
};

// 8x8 digit rows: 64 pixel intensities in [0,16] then a 0-9 label. Pixels
// are rescaled to [0,1]; rows are shuffled with the given seed and split
// 80/20 into train/test.
std::pair<Dataset, Dataset> load_digits_csv(const std::string& path,
                                            std::uint64_t split_seed = 0);

// Trajectory file: a `obs_dim=A,act_dim=B,discrete=C` header line, then one
// observation+action row per step.
Dataset load_trajectories_csv(const std::string& path);
void write_trajectories_csv(const std::string& path, const Dataset& data,
                            const TrajectoryManifest& manifest);
TrajectoryManifest load_trajectory_manifest(const std::string& csv_path);

}  // namespace ndp
