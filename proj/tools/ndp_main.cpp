// Command-line front end; talks to the ndp shared library through its C API
// only. Exit codes: 0 success, 1 runtime failure, 2 invalid arguments or
// config.

#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "ndp/ndp.h"

namespace {

int exit_code(ndp_status s) {
  switch (s) {
    case NDP_OK: return 0;
    case NDP_ERR_INVALID:
    case NDP_ERR_PARSE: return 2;
    default: return 1;
  }
}

int report_failure(ndp_status s) {
  std::fprintf(stderr, "error: %s\n", ndp_last_error());
  return exit_code(s);
}

struct StringOut {
  char* text = nullptr;
  ~StringOut() { ndp_string_free(text); }
  void print() const {
    if (text) std::fputs(text, stdout);
  }
};

using ConfigPtr = std::unique_ptr<ndp_config, decltype(&ndp_config_free)>;
using CheckpointPtr =
    std::unique_ptr<ndp_checkpoint, decltype(&ndp_checkpoint_free)>;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ndp: growing neural networks with neural developmental "
               "programs"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, task, data_path, out, expert, kind;
  unsigned long long seed = 0;
  bool seed_given = false;
  int workers = -1, episodes = 100, steps = -1;

  auto* train = app.add_subcommand("train", "run a training config");
  train->add_option("--config", config_path, "TOML run config")->required();
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--workers", workers, "override worker count");
  train->add_option("--out", out, "override the output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")
      ->required();
  eval->add_option("--task", task, "expected task (safety check)");
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--data", data_path, "dataset CSV (digits task)");
  eval->add_option("--out", out, "write eval.json here");

  auto* grow = app.add_subcommand("grow", "export a growth trace");
  grow->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")
      ->required();
  grow->add_option("--steps", steps, "developmental steps")->required();
  grow->add_option("--out", out, "snapshot directory")->required();
  grow->add_option("--seed", seed, "growth sampling seed");

  auto* gen = app.add_subcommand("gen-data", "generate a dataset");
  gen->add_option("--kind", kind, "dataset kind (cartpole-expert)")->required();
  gen->add_option("--out", out, "output CSV path")->required();
  gen->add_option("--seed", seed, "generation seed");
  gen->add_option("--expert", expert, "expert checkpoint to load");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  seed_given = train->count("--seed") > 0;

  if (train->parsed()) {
    ndp_config* raw = nullptr;
    if (ndp_status s = ndp_config_load(config_path.c_str(), &raw); s != NDP_OK)
      return report_failure(s);
    ConfigPtr cfg(raw, &ndp_config_free);
    if (seed_given) ndp_config_set_seed(cfg.get(), seed);
    if (workers >= 0) ndp_config_set_workers(cfg.get(), workers);
    if (!out.empty()) ndp_config_set_output_dir(cfg.get(), out.c_str());
    StringOut report;
    if (ndp_status s = ndp_train(cfg.get(), &report.text); s != NDP_OK)
      return report_failure(s);
    report.print();
    return 0;
  }

  if (eval->parsed() || grow->parsed()) {
    ndp_checkpoint* raw = nullptr;
    if (ndp_status s = ndp_checkpoint_load(checkpoint_path.c_str(), &raw);
        s != NDP_OK)
      return report_failure(s);
    CheckpointPtr ckpt(raw, &ndp_checkpoint_free);
    StringOut report;
    if (eval->parsed()) {
      std::string eval_out = out.empty() ? "" : out;
      if (ndp_status s =
              ndp_eval(ckpt.get(), task.empty() ? nullptr : task.c_str(),
                       episodes, seed, data_path.empty() ? nullptr : data_path.c_str(),
                       eval_out.empty() ? nullptr : eval_out.c_str(),
                       &report.text);
          s != NDP_OK)
        return report_failure(s);
    } else {
      if (ndp_status s =
              ndp_grow(ckpt.get(), steps, out.c_str(), seed, &report.text);
          s != NDP_OK)
        return report_failure(s);
    }
    report.print();
    return 0;
  }

  // gen-data
  StringOut report;
  if (ndp_status s =
          ndp_gen_data(kind.c_str(), out.c_str(), seed,
                       expert.empty() ? nullptr : expert.c_str(), &report.text);
      s != NDP_OK)
    return report_failure(s);
  report.print();
  return 0;
}
