#include "ndp/ndp.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ndp/commands.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ndp_status status_for(const ndp::Error& e) {
  switch (e.kind()) {
    case ndp::ErrorKind::Parse: return NDP_ERR_PARSE;
    case ndp::ErrorKind::Io: return NDP_ERR_IO;
    case ndp::ErrorKind::Contract:
    case ndp::ErrorKind::Mode: return NDP_ERR_INVALID;
    default: return NDP_ERR_RUNTIME;
  }
}

template <typename Fn>
ndp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NDP_OK;
  } catch (const ndp::Error& e) {
    g_last_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NDP_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return NDP_ERR_RUNTIME;
  }
}

ndp_status require(bool ok, const char* msg) {
  if (ok) return NDP_OK;
  g_last_error = msg;
  return NDP_ERR_INVALID;
}

void emit(char** out, const std::string& text) {
  if (out) *out = dup_string(text);
}

}  // namespace

struct ndp_config {
  ndp::RunConfig cfg;
};

struct ndp_checkpoint {
  ndp::Checkpoint ckpt;
};

extern "C" {

const char* ndp_version(void) { return "0.1.0"; }

const char* ndp_last_error(void) { return g_last_error.c_str(); }

void ndp_string_free(char* s) { std::free(s); }

ndp_status ndp_config_load(const char* path, ndp_config** out) {
  if (ndp_status s = require(path && out, "null argument"); s != NDP_OK) return s;
  return guarded([&] { *out = new ndp_config{ndp::load_run_config(path)}; });
}

ndp_status ndp_config_parse(const char* text, ndp_config** out) {
  if (ndp_status s = require(text && out, "null argument"); s != NDP_OK) return s;
  return guarded([&] { *out = new ndp_config{ndp::parse_run_config(text)}; });
}

ndp_status ndp_config_set_seed(ndp_config* cfg, unsigned long long seed) {
  if (ndp_status s = require(cfg != nullptr, "null config"); s != NDP_OK) return s;
  cfg->cfg.seed = seed;
  return NDP_OK;
}

ndp_status ndp_config_set_workers(ndp_config* cfg, int workers) {
  if (ndp_status s = require(cfg != nullptr, "null config"); s != NDP_OK) return s;
  cfg->cfg.workers = workers;
  return NDP_OK;
}

ndp_status ndp_config_set_output_dir(ndp_config* cfg, const char* dir) {
  if (ndp_status s = require(cfg && dir, "null argument"); s != NDP_OK) return s;
  cfg->cfg.output_dir = dir;
  return NDP_OK;
}

ndp_status ndp_config_canonical(const ndp_config* cfg, char** text_out) {
  if (ndp_status s = require(cfg && text_out, "null argument"); s != NDP_OK)
    return s;
  return guarded([&] { emit(text_out, ndp::canonical_config(cfg->cfg)); });
}

void ndp_config_free(ndp_config* cfg) { delete cfg; }

ndp_status ndp_train(const ndp_config* cfg, char** report_json_out) {
  if (ndp_status s = require(cfg != nullptr, "null config"); s != NDP_OK)
    return s;
  return guarded([&] { emit(report_json_out, ndp::cmd_train(cfg->cfg)); });
}

ndp_status ndp_checkpoint_load(const char* path, ndp_checkpoint** out) {
  if (ndp_status s = require(path && out, "null argument"); s != NDP_OK) return s;
  return guarded(
      [&] { *out = new ndp_checkpoint{ndp::load_checkpoint(path)}; });
}

void ndp_checkpoint_free(ndp_checkpoint* ckpt) { delete ckpt; }

ndp_status ndp_eval(const ndp_checkpoint* ckpt, const char* task, int episodes,
                    unsigned long long seed, const char* data_path,
                    const char* out_path, char** report_json_out) {
  if (ndp_status s = require(ckpt != nullptr, "null checkpoint"); s != NDP_OK)
    return s;
  return guarded([&] {
    emit(report_json_out,
         ndp::cmd_eval(ckpt->ckpt, task ? task : "", episodes, seed,
                       data_path ? data_path : "", out_path ? out_path : ""));
  });
}

ndp_status ndp_grow(const ndp_checkpoint* ckpt, int steps, const char* out_dir,
                    unsigned long long seed, char** report_json_out) {
  if (ndp_status s = require(ckpt && out_dir, "null argument"); s != NDP_OK)
    return s;
  return guarded([&] {
    emit(report_json_out, ndp::cmd_grow(ckpt->ckpt, steps, out_dir, seed));
  });
}

ndp_status ndp_gen_data(const char* kind, const char* out_path,
                        unsigned long long seed, const char* expert_checkpoint,
                        char** report_json_out) {
  if (ndp_status s = require(kind && out_path, "null argument"); s != NDP_OK)
    return s;
  return guarded([&] {
    emit(report_json_out,
         ndp::cmd_gen_data(kind, out_path, seed,
                           expert_checkpoint ? expert_checkpoint : ""));
  });
}

}  // extern "C"
