#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sage/chunk.hpp"
#include "sage/embedder.hpp"

namespace sage {

struct QueryHit {
  std::int64_t chunk_id = 0;
  double similarity = 0.0;
};

/// What the index was built with. Persisted beside the vectors so a query
/// session can refuse to mix an index with an incompatible embedder or a
/// different segmentation model.
struct IndexMeta {
  EmbedderSpec embedder;
  std::string seg_model_fingerprint;
  /// Opaque JSON snapshot of the pipeline configuration at build time.
  std::string config_snapshot;
};

/// Exact brute-force cosine index. Every query scans every vector; there is
/// no approximation anywhere, which keeps results reproducible and makes
/// this the reference answer for any future ANN backend.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  /// Insert a chunk and its embedding. The id must be unused; re-inserting
  /// an id throws ConflictError. Dimension mismatches throw
  /// ContractViolation. Zero vectors are accepted (they match nothing).
  void insert(Chunk chunk, Vector vec);

  bool contains(std::int64_t chunk_id) const;
  const Chunk& chunk(std::int64_t chunk_id) const;
  const Vector& vector(std::int64_t chunk_id) const;

  /// Ids in insertion order.
  std::vector<std::int64_t> ids() const;

  /// Top n by cosine similarity, ties broken by ascending chunk id so equal
  /// scores always come back in the same order. n must be positive; n larger
  /// than the store just returns everything. Throws EmptyIndexError on an
  /// empty store and ContractViolation on dimension mismatch.
  std::vector<QueryHit> query_top_n(const Vector& query, std::size_t n) const;

  const IndexMeta& meta() const { return meta_; }
  void set_meta(IndexMeta meta) { meta_ = std::move(meta); }

  /// Persist to a directory: chunks.jsonl (text + spans), vectors.bin
  /// (binary payload with a checksum footer) and meta.json.
  void save(const std::string& dir) const;

  /// Inverse of save. Verifies magic, format version and checksum, and that
  /// the chunk and vector files describe the same ids. Loaded stores answer
  /// queries identically to the original.
  static VectorStore load(const std::string& dir);

 private:
  struct Entry {
    Chunk chunk;
    Vector vec;
  };

  std::size_t dimension_;
  std::vector<Entry> entries_;
  std::unordered_map<std::int64_t, std::size_t> by_id_;
  IndexMeta meta_;
};

}  // namespace sage
