#include "ndp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ndp/toml.hpp"

namespace ndp {

namespace {

void validate(RunConfig& cfg) {
  static const std::set<std::string> evo_tasks = {"xor", "cartpole",
                                                  "smallworld"};
  static const std::set<std::string> diff_tasks = {"digits", "bc", "cartpole"};
  if (cfg.variant != "evo" && cfg.variant != "diff")
    fail(ErrorKind::Parse, "config: variant must be \"evo\" or \"diff\"");
  if (cfg.is_evo() && !evo_tasks.count(cfg.task))
    fail(ErrorKind::Parse,
         "config: evo variant supports tasks xor, cartpole, smallworld");
  if (!cfg.is_evo() && !diff_tasks.count(cfg.task))
    fail(ErrorKind::Parse,
         "config: diff variant supports tasks digits, bc, cartpole");
  if (cfg.task == "smallworld" && !cfg.is_evo())
    fail(ErrorKind::Parse, "config: smallworld requires the evo variant");
  if ((cfg.task == "digits" || cfg.task == "bc") && cfg.data_path.empty())
    fail(ErrorKind::Parse, "config: task '" + cfg.task + "' needs data_path");
  if (cfg.is_ppo()) cfg.diff_dev.critic = true;  // PPO needs the value node
  if (!cfg.is_evo()) cfg.diff_dev.validate();
}

std::string real_str(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  if (out.str().find('.') == std::string::npos &&
      out.str().find('e') == std::string::npos &&
      out.str().find("inf") == std::string::npos)
    return out.str() + ".0";
  return out.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  TomlDoc doc = TomlDoc::parse(text);
  RunConfig cfg;
  cfg.variant = doc.get_string("", "variant", "");
  cfg.task = doc.get_string("", "task", "");
  cfg.seed = static_cast<std::uint64_t>(doc.get_int("", "seed", 1));
  cfg.output_dir = doc.get_string("", "output_dir", "run_out");
  cfg.workers = static_cast<int>(doc.get_int("", "workers", 0));
  cfg.checkpoint_every = doc.get_int("", "checkpoint_every", 0);
  cfg.data_path = doc.get_string("", "data_path", "");

  if (cfg.variant == "evo") {
    EvoDevConfig& d = cfg.evo_dev;
    d.cycles = static_cast<int>(doc.get_int("dev", "cycles", d.cycles));
    d.pruning_threshold =
        doc.get_real("dev", "pruning_threshold", d.pruning_threshold);
    d.embedding_dim =
        static_cast<int>(doc.get_int("dev", "embedding_dim", d.embedding_dim));
    d.hidden = static_cast<int>(doc.get_int("dev", "hidden", d.hidden));
    d.hidden_repl =
        static_cast<int>(doc.get_int("dev", "hidden_repl", d.hidden_repl));
    d.hidden_weight =
        static_cast<int>(doc.get_int("dev", "hidden_weight", d.hidden_weight));
    d.weighted = doc.get_bool("dev", "weighted", d.weighted);
    d.max_nodes = static_cast<int>(doc.get_int("dev", "max_nodes", d.max_nodes));
    d.co_evolve_seed = doc.get_bool("dev", "co_evolve_seed", d.co_evolve_seed);
    d.replication_threshold =
        doc.get_real("dev", "replication_threshold", d.replication_threshold);
    d.io_pair_exclusion =
        doc.get_bool("dev", "io_pair_exclusion", d.io_pair_exclusion);

    EvoTrainConfig& t = cfg.evo_train;
    t.generations = doc.get_int("trainer", "generations", t.generations);
    t.popsize = static_cast<int>(doc.get_int("trainer", "popsize", t.popsize));
    t.sigma0 = doc.get_real("trainer", "sigma0", t.sigma0);
    t.rollouts_per_eval = static_cast<int>(
        doc.get_int("trainer", "rollouts_per_eval", t.rollouts_per_eval));
    t.penalty_nonviable =
        doc.get_real("trainer", "penalty_nonviable", t.penalty_nonviable);
    t.target_fitness = doc.get_real("trainer", "target_fitness", t.target_fitness);
    t.restart_enabled =
        doc.get_bool("trainer", "restart_enabled", t.restart_enabled);
    t.smallworld_refs = static_cast<int>(
        doc.get_int("trainer", "smallworld_refs", t.smallworld_refs));
    t.max_seconds = doc.get_real("trainer", "max_seconds", t.max_seconds);
  } else if (cfg.variant == "diff") {
    DiffDevConfig& d = cfg.diff_dev;
    d.growth_steps =
        static_cast<int>(doc.get_int("dev", "growth_steps", d.growth_steps));
    d.embedding_dim =
        static_cast<int>(doc.get_int("dev", "embedding_dim", d.embedding_dim));
    if (cfg.task == "digits") {
      d.n_in = 64;
      d.n_out = 10;
    }
    d.n_in = static_cast<int>(doc.get_int("dev", "n_in", d.n_in));
    d.n_out = static_cast<int>(doc.get_int("dev", "n_out", d.n_out));
    d.critic = doc.get_bool("dev", "critic", d.critic);
    d.msg_hidden =
        static_cast<int>(doc.get_int("dev", "msg_hidden", d.msg_hidden));
    d.edge_hidden =
        static_cast<int>(doc.get_int("dev", "edge_hidden", d.edge_hidden));

    if (cfg.task == "digits") {
      SupervisedConfig& t = cfg.supervised;
      t.learning_rate = doc.get_real("trainer", "learning_rate", t.learning_rate);
      t.batch_size =
          static_cast<int>(doc.get_int("trainer", "batch_size", t.batch_size));
      t.iterations = doc.get_int("trainer", "iterations", t.iterations);
    } else if (cfg.task == "bc") {
      BcConfig& t = cfg.bc;
      t.learning_rate = doc.get_real("trainer", "learning_rate", t.learning_rate);
      t.batch_size =
          static_cast<int>(doc.get_int("trainer", "batch_size", t.batch_size));
      t.iterations = doc.get_int("trainer", "iterations", t.iterations);
      t.eval_episodes = static_cast<int>(
          doc.get_int("trainer", "eval_episodes", t.eval_episodes));
    } else {
      PpoConfig& t = cfg.ppo;
      t.learning_rate = doc.get_real("trainer", "learning_rate", t.learning_rate);
      t.entropy_coef = doc.get_real("trainer", "entropy_coef", t.entropy_coef);
      t.updates_per_rollout = static_cast<int>(
          doc.get_int("trainer", "updates_per_rollout", t.updates_per_rollout));
      t.clip_epsilon = doc.get_real("trainer", "clip_epsilon", t.clip_epsilon);
      t.discount = doc.get_real("trainer", "discount", t.discount);
      t.gae_lambda = doc.get_real("trainer", "gae_lambda", t.gae_lambda);
      t.total_rollouts =
          doc.get_int("trainer", "total_rollouts", t.total_rollouts);
      t.value_loss_coef =
          doc.get_real("trainer", "value_loss_coef", t.value_loss_coef);
      t.normalize_advantages = doc.get_bool("trainer", "normalize_advantages",
                                            t.normalize_advantages);
      t.eval_episodes = static_cast<int>(
          doc.get_int("trainer", "eval_episodes", t.eval_episodes));
      t.early_stop_trigger =
          doc.get_real("trainer", "early_stop_trigger", t.early_stop_trigger);
      t.early_stop_target =
          doc.get_real("trainer", "early_stop_target", t.early_stop_target);
      t.eval_every =
          static_cast<int>(doc.get_int("trainer", "eval_every", t.eval_every));
      t.max_seconds = doc.get_real("trainer", "max_seconds", t.max_seconds);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "variant = \"" << cfg.variant << "\"\n";
  out << "task = \"" << cfg.task << "\"\n";
  out << "seed = " << cfg.seed << "\n";
  out << "output_dir = \"" << cfg.output_dir << "\"\n";
  out << "workers = " << cfg.workers << "\n";
  out << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  out << "data_path = \"" << cfg.data_path << "\"\n";
  out << "\n[dev]\n";
  if (cfg.is_evo()) {
    const EvoDevConfig& d = cfg.evo_dev;
    out << "cycles = " << d.cycles << "\n";
    out << "pruning_threshold = " << real_str(d.pruning_threshold) << "\n";
    out << "embedding_dim = " << d.embedding_dim << "\n";
    out << "hidden = " << d.hidden << "\n";
    out << "hidden_repl = " << d.hidden_repl << "\n";
    out << "hidden_weight = " << d.hidden_weight << "\n";
    out << "weighted = " << (d.weighted ? "true" : "false") << "\n";
    out << "max_nodes = " << d.max_nodes << "\n";
    out << "co_evolve_seed = " << (d.co_evolve_seed ? "true" : "false") << "\n";
    out << "replication_threshold = " << real_str(d.replication_threshold)
        << "\n";
    out << "io_pair_exclusion = " << (d.io_pair_exclusion ? "true" : "false")
        << "\n";
    out << "\n[trainer]\n";
    const EvoTrainConfig& t = cfg.evo_train;
    out << "generations = " << t.generations << "\n";
    out << "popsize = " << t.popsize << "\n";
    out << "sigma0 = " << real_str(t.sigma0) << "\n";
    out << "rollouts_per_eval = " << t.rollouts_per_eval << "\n";
    out << "penalty_nonviable = " << real_str(t.penalty_nonviable) << "\n";
    if (std::isfinite(t.target_fitness))
      out << "target_fitness = " << real_str(t.target_fitness) << "\n";
    out << "restart_enabled = " << (t.restart_enabled ? "true" : "false")
        << "\n";
    out << "smallworld_refs = " << t.smallworld_refs << "\n";
    out << "max_seconds = " << real_str(t.max_seconds) << "\n";
  } else {
    const DiffDevConfig& d = cfg.diff_dev;
    out << "growth_steps = " << d.growth_steps << "\n";
    out << "embedding_dim = " << d.embedding_dim << "\n";
    out << "n_in = " << d.n_in << "\n";
    out << "n_out = " << d.n_out << "\n";
    out << "critic = " << (d.critic ? "true" : "false") << "\n";
    out << "msg_hidden = " << d.msg_hidden << "\n";
    out << "edge_hidden = " << d.edge_hidden << "\n";
    out << "\n[trainer]\n";
    if (cfg.task == "digits") {
      const SupervisedConfig& t = cfg.supervised;
      out << "learning_rate = " << real_str(t.learning_rate) << "\n";
      out << "batch_size = " << t.batch_size << "\n";
      out << "iterations = " << t.iterations << "\n";
    } else if (cfg.task == "bc") {
      const BcConfig& t = cfg.bc;
      out << "learning_rate = " << real_str(t.learning_rate) << "\n";
      out << "batch_size = " << t.batch_size << "\n";
      out << "iterations = " << t.iterations << "\n";
      out << "eval_episodes = " << t.eval_episodes << "\n";
    } else {
      const PpoConfig& t = cfg.ppo;
      out << "learning_rate = " << real_str(t.learning_rate) << "\n";
      out << "entropy_coef = " << real_str(t.entropy_coef) << "\n";
      out << "updates_per_rollout = " << t.updates_per_rollout << "\n";
      out << "clip_epsilon = " << real_str(t.clip_epsilon) << "\n";
      out << "discount = " << real_str(t.discount) << "\n";
      out << "gae_lambda = " << real_str(t.gae_lambda) << "\n";
      out << "total_rollouts = " << t.total_rollouts << "\n";
      out << "value_loss_coef = " << real_str(t.value_loss_coef) << "\n";
      out << "normalize_advantages = "
          << (t.normalize_advantages ? "true" : "false") << "\n";
      out << "eval_episodes = " << t.eval_episodes << "\n";
      out << "early_stop_trigger = " << real_str(t.early_stop_trigger) << "\n";
      out << "early_stop_target = " << real_str(t.early_stop_target) << "\n";
      out << "eval_every = " << t.eval_every << "\n";
      out << "max_seconds = " << real_str(t.max_seconds) << "\n";
    }
  }
  return out.str();
}

}  // namespace ndp
