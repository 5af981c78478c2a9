#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sage/chunk.hpp"
#include "sage/embedder.hpp"

namespace sage {

enum class RerankerKind {
  /// Score = cosine(question, chunk) under the configured embedder.
  reference_cosine,
  /// POST {query, passages} to a scoring service that returns one score per
  /// passage.
  remote_service,
};

struct RerankerSpec {
  RerankerKind kind = RerankerKind::reference_cosine;
  std::string endpoint;
  std::string model;
  std::size_t max_in_flight = 4;
};

struct ScoredChunk {
  std::int64_t chunk_id = 0;
  double raw_score = 0.0;
  double normalized_score = 0.0;
};

/// Why select_gradient stopped where it did.
enum class CutReason {
  /// A score dropped off steeply enough relative to its predecessor.
  gradient_stop,
  /// Every candidate was selected before any drop-off appeared.
  exhausted_candidates,
  /// The first steep drop was inside the unconditional min_k prefix, so the
  /// cut landed exactly at the floor.
  min_k_floor,
};

const char* to_string(CutReason reason);

struct SelectionResult {
  std::vector<ScoredChunk> selected;
  std::size_t k_selected = 0;
  CutReason cut_reason = CutReason::gradient_stop;
};

/// Logistic squash 1/(1+e^-x) applied elementwise. Maps any real score into
/// (0, 1) while preserving order, so ratio tests against a threshold behave
/// the same for cosine scores and for unbounded service scores.
std::vector<double> normalize_scores(const std::vector<double>& raw);

/// Score candidates against the question and sort by descending
/// normalized_score, ties by ascending chunk id. Candidate order in is
/// irrelevant; the output ordering is what select_gradient consumes.
std::vector<ScoredChunk> rerank(const std::string& question,
                                const std::vector<Chunk>& candidates,
                                const RerankerSpec& reranker,
                                const EmbedderSpec& embedder);

/// Walk the ranked list and keep chunks until relevance falls off a cliff:
/// the first min(min_k, n) are always kept, then chunk i stays only while
/// normalized[i] >= g * normalized[i-1], the comparison always against the
/// immediately preceding chunk. Preconditions: candidates sorted by
/// non-increasing normalized_score, min_k >= 1, g in (0, 1].
SelectionResult select_gradient(const std::vector<ScoredChunk>& ranked,
                                std::size_t min_k, double g);

}  // namespace sage
