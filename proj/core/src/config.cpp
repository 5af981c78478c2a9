#include "sage/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/hashing.hpp"

namespace sage {

namespace {

using json = nlohmann::json;

const char* reranker_kind_name(RerankerKind kind) {
  return kind == RerankerKind::reference_cosine ? "reference_cosine"
                                                : "remote_service";
}

RerankerKind reranker_kind_from(const std::string& name) {
  if (name == "reference_cosine") return RerankerKind::reference_cosine;
  if (name == "remote_service") return RerankerKind::remote_service;
  throw ConfigError("unknown reranker kind: " + name);
}

const char* embedder_kind_name(EmbedderKind kind) {
  return kind == EmbedderKind::reference_hash ? "reference_hash"
                                              : "remote_service";
}

EmbedderKind embedder_kind_from(const std::string& name) {
  if (name == "reference_hash") return EmbedderKind::reference_hash;
  if (name == "remote_service") return EmbedderKind::remote_service;
  throw ConfigError("unknown embedder kind: " + name);
}

const char* llm_kind_name(LlmKind kind) {
  switch (kind) {
    case LlmKind::remote:
      return "remote";
    case LlmKind::scripted_mock:
      return "scripted_mock";
    case LlmKind::echo_top_chunk:
      return "echo_top_chunk";
  }
  return "unknown";
}

LlmKind llm_kind_from(const std::string& name) {
  if (name == "remote") return LlmKind::remote;
  if (name == "scripted_mock") return LlmKind::scripted_mock;
  if (name == "echo_top_chunk") return LlmKind::echo_top_chunk;
  throw ConfigError("unknown llm kind: " + name);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) {
      throw ConfigError("unknown config key \"" + key + "\" in " + where);
    }
  }
}

}  // namespace

void PipelineConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  check(ss > 0.0 && ss < 1.0 && std::isfinite(ss),
        "ss must be strictly between 0 and 1");
  check(coarse_len >= 16, "l (coarse token budget) must be >= 16");
  check(min_k >= 1, "min_k must be >= 1");
  check(top_n >= 1, "n (candidate pool) must be >= 1");
  check(min_k <= top_n, "min_k must not exceed n");
  check(g > 0.0 && g <= 1.0 && std::isfinite(g), "g must be in (0, 1]");
  check(fs >= 1 && fs <= 10, "fs must be in 1..10");
  check(max_feedback_rounds >= 1, "max_feedback_rounds must be >= 1");
  check(embedder.dimension >= 8, "embedder.dimension must be >= 8");
  check(embedder.kind != EmbedderKind::remote_service ||
            !embedder.endpoint.empty(),
        "remote embedder needs an endpoint");
  check(reranker.kind != RerankerKind::remote_service ||
            !reranker.endpoint.empty(),
        "remote reranker needs an endpoint");
  check(llm.kind != LlmKind::remote || !llm.endpoint.empty(),
        "remote llm needs an endpoint");
  check(llm.kind != LlmKind::scripted_mock || !llm.script_path.empty(),
        "scripted_mock llm needs a script_path");
  check(llm.max_output_tokens >= 1, "llm.max_output_tokens must be >= 1");
  check(price_in >= 0.0 && std::isfinite(price_in),
        "price_in must be non-negative and finite");
  check(price_out >= 0.0 && std::isfinite(price_out),
        "price_out must be non-negative and finite");
  check(eval_jobs >= 1, "eval_jobs must be >= 1");

  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

PipelineConfig parse_config_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  reject_unknown_keys(root,
                      {"ss", "l", "min_k", "g", "fs", "n",
                       "max_feedback_rounds", "embedder", "reranker", "llm",
                       "price_in", "price_out", "eval_jobs"},
                      "top level");

  PipelineConfig cfg;
  try {
    cfg.ss = root.value("ss", cfg.ss);
    cfg.coarse_len = root.value("l", cfg.coarse_len);
    cfg.min_k = root.value("min_k", cfg.min_k);
    cfg.g = root.value("g", cfg.g);
    cfg.fs = root.value("fs", cfg.fs);
    cfg.top_n = root.value("n", cfg.top_n);
    cfg.max_feedback_rounds =
        root.value("max_feedback_rounds", cfg.max_feedback_rounds);
    cfg.price_in = root.value("price_in", cfg.price_in);
    cfg.price_out = root.value("price_out", cfg.price_out);
    cfg.eval_jobs = root.value("eval_jobs", cfg.eval_jobs);

    if (root.contains("embedder")) {
      const json& e = root["embedder"];
      reject_unknown_keys(
          e, {"kind", "dimension", "endpoint", "model", "max_in_flight"},
          "embedder");
      if (e.contains("kind")) {
        cfg.embedder.kind = embedder_kind_from(e["kind"].get<std::string>());
      }
      cfg.embedder.dimension = e.value("dimension", cfg.embedder.dimension);
      cfg.embedder.endpoint = e.value("endpoint", cfg.embedder.endpoint);
      cfg.embedder.model = e.value("model", cfg.embedder.model);
      cfg.embedder.max_in_flight =
          e.value("max_in_flight", cfg.embedder.max_in_flight);
    }
    if (root.contains("reranker")) {
      const json& r = root["reranker"];
      reject_unknown_keys(r, {"kind", "endpoint", "model", "max_in_flight"},
                          "reranker");
      if (r.contains("kind")) {
        cfg.reranker.kind = reranker_kind_from(r["kind"].get<std::string>());
      }
      cfg.reranker.endpoint = r.value("endpoint", cfg.reranker.endpoint);
      cfg.reranker.model = r.value("model", cfg.reranker.model);
      cfg.reranker.max_in_flight =
          r.value("max_in_flight", cfg.reranker.max_in_flight);
    }
    if (root.contains("llm")) {
      const json& l = root["llm"];
      reject_unknown_keys(l,
                          {"kind", "model", "endpoint", "max_output_tokens",
                           "script_path", "max_attempts", "backoff_ms",
                           "max_in_flight"},
                          "llm");
      if (l.contains("kind")) {
        cfg.llm.kind = llm_kind_from(l["kind"].get<std::string>());
      }
      cfg.llm.model = l.value("model", cfg.llm.model);
      cfg.llm.endpoint = l.value("endpoint", cfg.llm.endpoint);
      cfg.llm.max_output_tokens =
          l.value("max_output_tokens", cfg.llm.max_output_tokens);
      cfg.llm.script_path = l.value("script_path", cfg.llm.script_path);
      cfg.llm.max_attempts = l.value("max_attempts", cfg.llm.max_attempts);
      cfg.llm.backoff_ms = l.value("backoff_ms", cfg.llm.backoff_ms);
      cfg.llm.max_in_flight = l.value("max_in_flight", cfg.llm.max_in_flight);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has wrong type: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  // nlohmann objects keep keys sorted, so this rendering is canonical and
  // fingerprint-stable.
  const json root = {
      {"ss", cfg.ss},
      {"l", cfg.coarse_len},
      {"min_k", cfg.min_k},
      {"g", cfg.g},
      {"fs", cfg.fs},
      {"n", cfg.top_n},
      {"max_feedback_rounds", cfg.max_feedback_rounds},
      {"price_in", cfg.price_in},
      {"price_out", cfg.price_out},
      {"eval_jobs", cfg.eval_jobs},
      {"embedder",
       {{"kind", embedder_kind_name(cfg.embedder.kind)},
        {"dimension", cfg.embedder.dimension},
        {"endpoint", cfg.embedder.endpoint},
        {"model", cfg.embedder.model},
        {"max_in_flight", cfg.embedder.max_in_flight}}},
      {"reranker",
       {{"kind", reranker_kind_name(cfg.reranker.kind)},
        {"endpoint", cfg.reranker.endpoint},
        {"model", cfg.reranker.model},
        {"max_in_flight", cfg.reranker.max_in_flight}}},
      {"llm",
       {{"kind", llm_kind_name(cfg.llm.kind)},
        {"model", cfg.llm.model},
        {"endpoint", cfg.llm.endpoint},
        {"max_output_tokens", cfg.llm.max_output_tokens},
        {"script_path", cfg.llm.script_path},
        {"max_attempts", cfg.llm.max_attempts},
        {"backoff_ms", cfg.llm.backoff_ms},
        {"max_in_flight", cfg.llm.max_in_flight}}},
  };
  return root.dump();
}

std::string config_fingerprint(const PipelineConfig& cfg) {
  return to_hex(fnv1a64(config_to_json(cfg)));
}

}  // namespace sage
