#pragma once

#include <cstdint>
#include <string>

#include "sage/chunk_selection.hpp"
#include "sage/embedder.hpp"
#include "sage/llm_gateway.hpp"

namespace sage {

/// Everything the pipeline needs to build, retrieve and answer. Defaults
/// are the tuned operating point; override via JSON (load_config) or
/// field-by-field before validate().
struct PipelineConfig {
  /// Segmentation score threshold: adjacent sentences scoring below this
  /// start a new chunk. Strictly inside (0, 1) here; the raw segmentation
  /// API also accepts the degenerate endpoints.
  double ss = 0.55;
  /// Coarse chunk budget in tokens.
  std::size_t coarse_len = 400;
  /// Chunks always kept by selection before the drop-off rule applies.
  std::size_t min_k = 7;
  /// Drop-off ratio: keep chunk i while norm[i] >= g * norm[i-1].
  double g = 0.3;
  /// Feedback acceptance bar: answers scoring >= fs (1..10) are final.
  int fs = 9;
  /// Candidate pool size fetched from the index per question.
  std::size_t top_n = 20;
  /// Upper bound on answer attempts per question.
  std::size_t max_feedback_rounds = 3;

  EmbedderSpec embedder;
  RerankerSpec reranker;
  LlmSpec llm;

  /// Per-token prices for cost reporting. Defaults: $10 per 1M input,
  /// $30 per 1M output.
  double price_in = 10.0 / 1e6;
  double price_out = 30.0 / 1e6;

  /// Worker threads for evaluate(); scripted mocks force 1.
  std::size_t eval_jobs = 1;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

/// Parse a JSON config file. Unknown keys are rejected (they are almost
/// always typos of known ones). Missing keys keep their defaults. The
/// result is validated before being returned.
PipelineConfig load_config(const std::string& path);

PipelineConfig parse_config_json(const std::string& json_text);

/// Canonical JSON rendering (sorted keys). parse(config_to_json(c)) == c.
std::string config_to_json(const PipelineConfig& cfg);

/// Stable digest of the canonical rendering.
std::string config_fingerprint(const PipelineConfig& cfg);

}  // namespace sage
