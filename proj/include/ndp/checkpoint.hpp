#pragma once

#include <string>

#include "ndp/ndp_diff.hpp"
#include "ndp/ndp_evo.hpp"

namespace ndp {

// Self-describing parameter checkpoint: `config` holds variant, task and the
// developmental config; `flat_params` is the packed parameter vector.
struct Checkpoint {
  std::string variant;  // "evo" | "diff"
  std::string task;
  EvoDevConfig evo_dev;
  NdpEvoParams evo_params;
  DiffDevConfig diff_dev;
  NdpDiffParams diff_params;
  std::string rng_state;  // diff only
};

void save_evo_checkpoint(const std::string& path, const std::string& task,
                         const EvoDevConfig& dev, const NdpEvoParams& params);
void save_diff_checkpoint(const std::string& path, const std::string& task,
                          const DiffDevConfig& dev, const NdpDiffParams& params,
                          const std::string& rng_state);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ndp
