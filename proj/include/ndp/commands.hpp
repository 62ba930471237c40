#pragma once

#include <string>

#include "ndp/checkpoint.hpp"
#include "ndp/config.hpp"

namespace ndp {

// Subcommand bodies shared by the C API and the test suite. Each returns the
// report JSON it also writes into the run directory.
std::string cmd_train(const RunConfig& cfg);
std::string cmd_eval(const Checkpoint& ckpt, const std::string& task,
                     int episodes, std::uint64_t seed,
                     const std::string& data_path,
                     const std::string& out_path);
std::string cmd_grow(const Checkpoint& ckpt, int steps,
                     const std::string& out_dir, std::uint64_t seed);
std::string cmd_gen_data(const std::string& kind, const std::string& out_path,
                         std::uint64_t seed,
                         const std::string& expert_checkpoint);

}  // namespace ndp
