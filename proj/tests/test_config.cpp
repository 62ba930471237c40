#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "ndp/config.hpp"
#include "ndp/toml.hpp"

using namespace ndp;

TEST_CASE("toml subset parsing") {
  TomlDoc doc = TomlDoc::parse(R"(
# top comment
variant = "evo"
seed = 42
ratio = 0.25   # trailing comment
flag = true

[dev]
cycles = 4
name = "a # not a comment"
)");
  CHECK(doc.get_string("", "variant", "") == "evo");
  CHECK(doc.get_int("", "seed", 0) == 42);
  CHECK(doc.get_real("", "ratio", 0.0) == 0.25);
  CHECK(doc.get_bool("", "flag", false));
  CHECK(doc.get_int("dev", "cycles", 0) == 4);
  CHECK(doc.get_string("dev", "name", "") == "a # not a comment");
  CHECK(doc.get_int("dev", "missing", 7) == 7);
  CHECK_FALSE(doc.has("dev", "missing"));
}

TEST_CASE("toml parse errors carry line numbers") {
  try {
    TomlDoc::parse("a = 1\nb 2\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(TomlDoc::parse("[dev\nx = 1\n"), Error);
  CHECK_THROWS_AS(TomlDoc::parse("x = \"unterminated\n"), Error);
  try {
    TomlDoc doc = TomlDoc::parse("x = notanumber\n");
    doc.get_int("", "x", 0);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("x") != std::string::npos);
  }
}

TEST_CASE("run config: evo round trip through canonical form") {
  RunConfig cfg = parse_run_config(R"(
variant = "evo"
task = "xor"
seed = 7
output_dir = "runs/xor"

[dev]
embedding_dim = 1
hidden = 1
hidden_repl = 1
hidden_weight = 1
co_evolve_seed = false

[trainer]
generations = 500
popsize = 64
)");
  CHECK(cfg.evo_dev.embedding_dim == 1);
  CHECK(cfg.evo_train.popsize == 64);
  CHECK(cfg.evo_train.sigma0 == 0.1);  // default preserved
  std::string canon = canonical_config(cfg);
  RunConfig back = parse_run_config(canon);
  CHECK(canonical_config(back) == canon);
  CHECK(back.seed == 7);
  CHECK(back.evo_train.generations == 500);
  CHECK_FALSE(back.evo_dev.co_evolve_seed);
}

TEST_CASE("run config: diff ppo forces the critic and round-trips") {
  RunConfig cfg = parse_run_config(R"(
variant = "diff"
task = "cartpole"
seed = 3

[dev]
growth_steps = 48
embedding_dim = 8

[trainer]
learning_rate = 0.0005
total_rollouts = 100
)");
  CHECK(cfg.is_ppo());
  CHECK(cfg.diff_dev.critic);  // forced for PPO
  CHECK(cfg.ppo.learning_rate == 0.0005);
  std::string canon = canonical_config(cfg);
  CHECK(canonical_config(parse_run_config(canon)) == canon);
}

TEST_CASE("run config validation") {
  SUBCASE("unknown variant") {
    CHECK_THROWS_AS(parse_run_config("variant = \"magic\"\ntask = \"xor\"\n"),
                    Error);
  }
  SUBCASE("smallworld requires evo") {
    CHECK_THROWS_AS(
        parse_run_config("variant = \"diff\"\ntask = \"smallworld\"\n"), Error);
    CHECK_NOTHROW(
        parse_run_config("variant = \"evo\"\ntask = \"smallworld\"\n"));
  }
  SUBCASE("digits and bc need a data path") {
    CHECK_THROWS_AS(parse_run_config("variant = \"diff\"\ntask = \"digits\"\n"),
                    Error);
    CHECK_NOTHROW(parse_run_config(
        "variant = \"diff\"\ntask = \"digits\"\ndata_path = \"d.csv\"\n"));
  }
  SUBCASE("evo tasks reject diff-only tasks") {
    CHECK_THROWS_AS(parse_run_config("variant = \"evo\"\ntask = \"digits\"\n"),
                    Error);
  }
}

TEST_CASE("digits task pins the dataset arity") {
  RunConfig cfg = parse_run_config(
      "variant = \"diff\"\ntask = \"digits\"\ndata_path = \"d.csv\"\n");
  CHECK(cfg.diff_dev.n_in == 64);
  CHECK(cfg.diff_dev.n_out == 10);
}
