#include "ndp/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace ndp {

namespace {

nlohmann::json evo_dev_json(const EvoDevConfig& d) {
  return {{"cycles", d.cycles},
          {"pruning_threshold", d.pruning_threshold},
          {"embedding_dim", d.embedding_dim},
          {"hidden", d.hidden},
          {"hidden_repl", d.hidden_repl},
          {"hidden_weight", d.hidden_weight},
          {"weighted", d.weighted},
          {"max_nodes", d.max_nodes},
          {"co_evolve_seed", d.co_evolve_seed},
          {"replication_threshold", d.replication_threshold},
          {"io_pair_exclusion", d.io_pair_exclusion}};
}

EvoDevConfig evo_dev_from_json(const nlohmann::json& j) {
  EvoDevConfig d;
  d.cycles = j.at("cycles").get<int>();
  d.pruning_threshold = j.at("pruning_threshold").get<double>();
  d.embedding_dim = j.at("embedding_dim").get<int>();
  d.hidden = j.at("hidden").get<int>();
  d.hidden_repl = j.at("hidden_repl").get<int>();
  d.hidden_weight = j.at("hidden_weight").get<int>();
  d.weighted = j.at("weighted").get<bool>();
  d.max_nodes = j.at("max_nodes").get<int>();
  d.co_evolve_seed = j.at("co_evolve_seed").get<bool>();
  d.replication_threshold = j.at("replication_threshold").get<double>();
  d.io_pair_exclusion = j.at("io_pair_exclusion").get<bool>();
  return d;
}

nlohmann::json diff_dev_json(const DiffDevConfig& d) {
  return {{"growth_steps", d.growth_steps},
          {"embedding_dim", d.embedding_dim},
          {"n_in", d.n_in},
          {"n_out", d.n_out},
          {"critic", d.critic},
          {"msg_hidden", d.msg_hidden},
          {"edge_hidden", d.edge_hidden}};
}

DiffDevConfig diff_dev_from_json(const nlohmann::json& j) {
  DiffDevConfig d;
  d.growth_steps = j.at("growth_steps").get<int>();
  d.embedding_dim = j.at("embedding_dim").get<int>();
  d.n_in = j.at("n_in").get<int>();
  d.n_out = j.at("n_out").get<int>();
  d.critic = j.at("critic").get<bool>();
  d.msg_hidden = j.at("msg_hidden").get<int>();
  d.edge_hidden = j.at("edge_hidden").get<int>();
  return d;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

}  // namespace

void save_evo_checkpoint(const std::string& path, const std::string& task,
                         const EvoDevConfig& dev, const NdpEvoParams& params) {
  nlohmann::json j;
  j["config"] = {{"variant", "evo"}, {"task", task}, {"dev", evo_dev_json(dev)}};
  if (!dev.co_evolve_seed)
    j["config"]["seed_embedding"] = params.seed_embedding;
  j["flat_params"] = pack_evo_params(params, dev);
  write_file(path, j.dump(2) + "\n");
}

void save_diff_checkpoint(const std::string& path, const std::string& task,
                          const DiffDevConfig& dev, const NdpDiffParams& params,
                          const std::string& rng_state) {
  nlohmann::json j;
  j["config"] = {{"variant", "diff"}, {"task", task}, {"dev", diff_dev_json(dev)}};
  j["flat_params"] = params.pack();
  j["rng_state"] = rng_state;
  write_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    Checkpoint c;
    const auto& cfg = j.at("config");
    c.variant = cfg.at("variant").get<std::string>();
    c.task = cfg.at("task").get<std::string>();
    auto flat = j.at("flat_params").get<std::vector<double>>();
    if (c.variant == "evo") {
      c.evo_dev = evo_dev_from_json(cfg.at("dev"));
      c.evo_params = unpack_evo_params(c.evo_dev, flat);
      if (!c.evo_dev.co_evolve_seed)
        c.evo_params.seed_embedding =
            cfg.at("seed_embedding").get<std::vector<double>>();
    } else if (c.variant == "diff") {
      c.diff_dev = diff_dev_from_json(cfg.at("dev"));
      c.diff_params = NdpDiffParams::unpack(c.diff_dev, flat);
      c.rng_state = j.value("rng_state", "");
    } else {
      fail(ErrorKind::Parse, "checkpoint: unknown variant '" + c.variant + "'");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("checkpoint ") + path + ": " + e.what());
  }
}

}  // namespace ndp
