#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sage {

/// Dense embedding. Non-empty inputs embed to unit L2 length; inputs with no
/// features at all come back as the zero vector (see embed_text).
using Vector = std::vector<double>;

double l2_norm(const Vector& v);
bool is_zero_vector(const Vector& v);

/// Cosine similarity in [-1, 1]; 0.0 when either operand is the zero
/// vector. Throws ContractViolation on dimension mismatch.
double cosine_similarity(const Vector& a, const Vector& b);

enum class EmbedderKind {
  /// Deterministic local embedder: hashed character trigrams. No model
  /// weights, no network, same text always maps to the same vector. Quality
  /// is only "similar surface text lands nearby", which is enough for
  /// pipeline work and tests; swap in a remote service for real retrieval.
  reference_hash,
  /// OpenAI-style POST /v1/embeddings service.
  remote_service,
};

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::reference_hash;
  std::size_t dimension = 256;
  /// remote_service only.
  std::string endpoint;
  std::string model;
  /// Cap on concurrent in-flight HTTP requests across threads.
  std::size_t max_in_flight = 4;
};

bool operator==(const EmbedderSpec& a, const EmbedderSpec& b);

/// Embed one text. Empty or feature-less input (e.g. whitespace only) is not
/// an error: it returns the zero vector and sets *no_features when provided,
/// so batch callers can warn instead of dying mid-corpus.
Vector embed_text(const std::string& text, const EmbedderSpec& spec,
                  bool* no_features = nullptr);

/// Embed many texts. For the remote kind this batches texts into one request
/// per wire call (large inputs are split into sub-batches). Element-level
/// failures are reported with the offending index in the message.
std::vector<Vector> embed_batch(const std::vector<std::string>& texts,
                                const EmbedderSpec& spec);

}  // namespace sage
