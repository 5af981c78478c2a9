#include <doctest.h>

#include <string>

#include "sage/config.hpp"
#include "sage/error.hpp"
#include "support/fixtures.hpp"

using namespace sage;

TEST_SUITE("pipeline config") {

TEST_CASE("defaults describe the tuned operating point") {
  PipelineConfig cfg;
  CHECK(cfg.ss == doctest::Approx(0.55));
  CHECK(cfg.coarse_len == 400);
  CHECK(cfg.min_k == 7);
  CHECK(cfg.g == doctest::Approx(0.3));
  CHECK(cfg.fs == 9);
  CHECK(cfg.top_n == 20);
  CHECK(cfg.max_feedback_rounds == 3);
  CHECK(cfg.price_in == doctest::Approx(10.0 / 1e6));
  CHECK(cfg.price_out == doctest::Approx(30.0 / 1e6));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("json round-trips to an identical rendering") {
  PipelineConfig cfg;
  cfg.ss = 0.4;
  cfg.min_k = 3;
  cfg.top_n = 12;
  cfg.embedder.dimension = 96;
  const auto text = config_to_json(cfg);
  const auto back = parse_config_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.ss == doctest::Approx(0.4));
  CHECK(back.min_k == 3);
  CHECK(back.top_n == 12);
  CHECK(back.embedder.dimension == 96);
}

TEST_CASE("missing keys keep their defaults") {
  const auto cfg = parse_config_json("{\"min_k\": 2, \"n\": 5}");
  CHECK(cfg.min_k == 2);
  CHECK(cfg.top_n == 5);
  CHECK(cfg.ss == doctest::Approx(0.55));
  CHECK(cfg.fs == 9);
}

TEST_CASE("unknown keys are rejected as likely typos") {
  CHECK_THROWS_AS(parse_config_json("{\"min_kk\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"embedder\": {\"dimensions\": 64}}"),
                  ConfigError);
}

TEST_CASE("invalid json and non-objects are config errors") {
  CHECK_THROWS_AS(parse_config_json("{nope"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("[1, 2]"), ConfigError);
}

TEST_CASE("validation collects every violation at once") {
  PipelineConfig cfg;
  cfg.ss = 1.5;
  cfg.coarse_len = 4;
  cfg.g = 0.0;
  try {
    cfg.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("ss") != std::string::npos);
    CHECK(what.find("16") != std::string::npos);
    CHECK(what.find("g") != std::string::npos);
  }
}

TEST_CASE("selection floor cannot exceed the candidate pool") {
  PipelineConfig cfg;
  cfg.min_k = 21;
  cfg.top_n = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.min_k = 20;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("remote services require endpoints") {
  PipelineConfig cfg;
  cfg.llm.kind = LlmKind::remote;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.llm.endpoint = "http://llm.test/v1/chat/completions";
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("loading reads from disk and validates") {
  sage_test::TempDir dir;
  sage_test::write_file(dir.file("ok.json"), "{\"min_k\": 4}\n");
  CHECK(load_config(dir.file("ok.json")).min_k == 4);

  sage_test::write_file(dir.file("bad.json"), "{\"min_k\": 0}\n");
  CHECK_THROWS_AS(load_config(dir.file("bad.json")), ConfigError);
  // A missing config file is itself a configuration problem.
  CHECK_THROWS_AS(load_config(dir.file("absent.json")), ConfigError);
}

TEST_CASE("fingerprint is stable and tracks meaningful changes") {
  PipelineConfig a;
  PipelineConfig b;
  CHECK(config_fingerprint(a) == config_fingerprint(b));
  b.min_k = 6;
  CHECK(config_fingerprint(a) != config_fingerprint(b));
}

}  // TEST_SUITE
