/* C API of the ndp shared library. All functions return NDP_OK on success;
 * on failure they return an error code and ndp_last_error() describes the
 * problem (thread-local). Strings returned through char** are owned by the
 * caller and must be released with ndp_string_free(). */

#ifndef NDP_NDP_H
#define NDP_NDP_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ndp_status {
  NDP_OK = 0,
  NDP_ERR_INVALID = 1, /* bad arguments or config */
  NDP_ERR_PARSE = 2,   /* malformed config, checkpoint or dataset */
  NDP_ERR_IO = 3,      /* filesystem failure */
  NDP_ERR_RUNTIME = 4  /* failure while running */
} ndp_status;

const char* ndp_version(void);
const char* ndp_last_error(void);
void ndp_string_free(char* s);

/* ---- run configuration (TOML) ---- */
typedef struct ndp_config ndp_config;

ndp_status ndp_config_load(const char* path, ndp_config** out);
ndp_status ndp_config_parse(const char* text, ndp_config** out);
ndp_status ndp_config_set_seed(ndp_config* cfg, unsigned long long seed);
ndp_status ndp_config_set_workers(ndp_config* cfg, int workers);
ndp_status ndp_config_set_output_dir(ndp_config* cfg, const char* dir);
ndp_status ndp_config_canonical(const ndp_config* cfg, char** text_out);
void ndp_config_free(ndp_config* cfg);

/* Runs the configured trainer; writes history.csv, checkpoint.json, the
 * final grown graph (JSON + DOT) and report.json into the output dir.
 * report_json_out (optional) receives the report text. */
ndp_status ndp_train(const ndp_config* cfg, char** report_json_out);

/* ---- checkpoints ---- */
typedef struct ndp_checkpoint ndp_checkpoint;

ndp_status ndp_checkpoint_load(const char* path, ndp_checkpoint** out);
void ndp_checkpoint_free(ndp_checkpoint* ckpt);

/* Evaluates a checkpoint: episode returns for policies, accuracy for digits
 * (data_path must point at the digits CSV; pass NULL otherwise). Writes
 * eval.json to out_path when given. */
ndp_status ndp_eval(const ndp_checkpoint* ckpt, const char* task, int episodes,
                    unsigned long long seed, const char* data_path,
                    const char* out_path, char** report_json_out);

/* Re-runs development for `steps` cycles/growth-steps, writing per-step
 * graph snapshots (JSON + DOT) and a step,nodes,edges summary CSV. */
ndp_status ndp_grow(const ndp_checkpoint* ckpt, int steps, const char* out_dir,
                    unsigned long long seed, char** report_json_out);

/* Generates a dataset. Supported kinds: "cartpole-expert" (expert rollouts
 * to CSV + manifest; trains a PPO expert unless expert_checkpoint names
 * one). */
ndp_status ndp_gen_data(const char* kind, const char* out_path,
                        unsigned long long seed, const char* expert_checkpoint,
                        char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* NDP_NDP_H */
