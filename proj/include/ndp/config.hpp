#pragma once

#include <string>

#include "ndp/trainers.hpp"

namespace ndp {

// One training run: variant + task select which dev/trainer sections apply.
struct RunConfig {
  std::string variant;  // "evo" | "diff"
  std::string task;     // xor | cartpole | smallworld | digits | bc
  std::uint64_t seed = 1;
  std::string output_dir = "run_out";
  int workers = 0;  // 0 = hardware concurrency
  long checkpoint_every = 0;
  std::string data_path;

  EvoDevConfig evo_dev;
  DiffDevConfig diff_dev;
  EvoTrainConfig evo_train;
  SupervisedConfig supervised;
  BcConfig bc;
  PpoConfig ppo;

  bool is_evo() const { return variant == "evo"; }
  bool is_ppo() const { return variant == "diff" && task == "cartpole"; }
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Fixed-field-order serialization; parsing the canonical text yields an
// identical config (round-trip identity).
std::string canonical_config(const RunConfig& cfg);

}  // namespace ndp
