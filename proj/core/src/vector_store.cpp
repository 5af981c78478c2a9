#include "sage/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/hashing.hpp"

namespace sage {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'S', 'A', 'G', 'E', 'V', 'E', 'C', '\0'};
constexpr std::uint32_t kVectorFormatVersion = 1;
constexpr int kMetaFormatVersion = 1;

const char* embedder_kind_name(EmbedderKind kind) {
  return kind == EmbedderKind::reference_hash ? "reference_hash"
                                              : "remote_service";
}

EmbedderKind embedder_kind_from(const std::string& name) {
  if (name == "reference_hash") return EmbedderKind::reference_hash;
  if (name == "remote_service") return EmbedderKind::remote_service;
  throw IoError("unknown embedder kind in metadata: " + name);
}

template <typename T>
void write_raw(std::ofstream& out, const T& value, std::uint64_t* hash) {
  const char* bytes = reinterpret_cast<const char*>(&value);
  out.write(bytes, sizeof(T));
  if (hash) *hash = fnv1a64(bytes, sizeof(T), *hash);
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& file, std::uint64_t* hash) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw IoError("unexpected end of file: " + file);
  }
  if (hash) {
    *hash = fnv1a64(reinterpret_cast<const char*>(&value), sizeof(T), *hash);
  }
  return value;
}

}  // namespace

VectorStore::VectorStore(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw ContractViolation("vector store dimension must be positive");
  }
}

void VectorStore::insert(Chunk chunk, Vector vec) {
  if (vec.size() != dimension_) {
    throw ContractViolation("vector has dimension " +
                            std::to_string(vec.size()) + ", store expects " +
                            std::to_string(dimension_));
  }
  if (by_id_.count(chunk.id)) {
    throw ConflictError("chunk id " + std::to_string(chunk.id) +
                        " already present");
  }
  by_id_.emplace(chunk.id, entries_.size());
  entries_.push_back({std::move(chunk), std::move(vec)});
}

bool VectorStore::contains(std::int64_t chunk_id) const {
  return by_id_.count(chunk_id) > 0;
}

const Chunk& VectorStore::chunk(std::int64_t chunk_id) const {
  auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) {
    throw ContractViolation("unknown chunk id " + std::to_string(chunk_id));
  }
  return entries_[it->second].chunk;
}

const Vector& VectorStore::vector(std::int64_t chunk_id) const {
  auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) {
    throw ContractViolation("unknown chunk id " + std::to_string(chunk_id));
  }
  return entries_[it->second].vec;
}

std::vector<std::int64_t> VectorStore::ids() const {
  std::vector<std::int64_t> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.chunk.id);
  return out;
}

std::vector<QueryHit> VectorStore::query_top_n(const Vector& query,
                                               std::size_t n) const {
  if (entries_.empty()) throw EmptyIndexError("query against empty index");
  if (n == 0) throw ContractViolation("query needs n >= 1");
  if (query.size() != dimension_) {
    throw ContractViolation("query has dimension " +
                            std::to_string(query.size()) + ", store expects " +
                            std::to_string(dimension_));
  }

  std::vector<QueryHit> hits;
  hits.reserve(entries_.size());
  double qn = 0.0;
  for (double x : query) qn += x * x;
  const double query_norm = std::sqrt(qn);

  for (const auto& e : entries_) {
    double dot = 0.0, en = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) {
      dot += query[i] * e.vec[i];
      en += e.vec[i] * e.vec[i];
    }
    double sim = 0.0;
    // Zero vectors (no-feature chunks or queries) match nothing instead of
    // poisoning the ranking with NaNs.
    if (query_norm > 0.0 && en > 0.0) {
      sim = std::clamp(dot / (query_norm * std::sqrt(en)), -1.0, 1.0);
    }
    hits.push_back({e.chunk.id, sim});
  }

  std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.chunk_id < b.chunk_id;
  });
  if (hits.size() > n) hits.resize(n);
  return hits;
}

void VectorStore::save(const std::string& dir) const {
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "chunks.jsonl",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write chunks.jsonl in " + dir);
    for (const auto& e : entries_) {
      json row = {
          {"id", e.chunk.id},
          {"doc_id", e.chunk.doc_id},
          {"text", e.chunk.text},
          {"token_count", e.chunk.token_count},
          {"paragraph", e.chunk.paragraph},
          {"sentence_begin", e.chunk.sentence_begin},
          {"sentence_end", e.chunk.sentence_end},
      };
      out << row.dump() << '\n';
    }
    out.flush();
    if (!out) throw IoError("short write to chunks.jsonl in " + dir);
  }

  {
    std::ofstream out(fs::path(dir) / "vectors.bin",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write vectors.bin in " + dir);
    out.write(kMagic, sizeof(kMagic));
    write_raw(out, kVectorFormatVersion, nullptr);
    write_raw(out, static_cast<std::uint32_t>(dimension_), nullptr);
    write_raw(out, static_cast<std::uint64_t>(entries_.size()), nullptr);
    std::uint64_t hash = kFnvOffsetBasis;
    for (const auto& e : entries_) {
      write_raw(out, e.chunk.id, &hash);
      for (double x : e.vec) write_raw(out, x, &hash);
    }
    write_raw(out, hash, nullptr);
    out.flush();
    if (!out) throw IoError("short write to vectors.bin in " + dir);
  }

  {
    json meta = {
        {"format_version", kMetaFormatVersion},
        {"dimension", dimension_},
        {"count", entries_.size()},
        {"embedder",
         {{"kind", embedder_kind_name(meta_.embedder.kind)},
          {"dimension", meta_.embedder.dimension},
          {"endpoint", meta_.embedder.endpoint},
          {"model", meta_.embedder.model},
          {"max_in_flight", meta_.embedder.max_in_flight}}},
        {"seg_model_fingerprint", meta_.seg_model_fingerprint},
    };
    if (!meta_.config_snapshot.empty()) {
      try {
        meta["config_snapshot"] = json::parse(meta_.config_snapshot);
      } catch (const json::exception&) {
        meta["config_snapshot"] = meta_.config_snapshot;
      }
    }
    std::ofstream out(fs::path(dir) / "meta.json",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write meta.json in " + dir);
    out << meta.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("short write to meta.json in " + dir);
  }
}

VectorStore VectorStore::load(const std::string& dir) {
  const fs::path base(dir);

  json meta;
  {
    std::ifstream in(base / "meta.json", std::ios::binary);
    if (!in) throw IoError("cannot open meta.json in " + dir);
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw IoError("meta.json is not valid JSON: " + std::string(e.what()));
    }
  }
  const int meta_version = meta.value("format_version", -1);
  if (meta_version != kMetaFormatVersion) {
    throw VersionMismatchError("index metadata version " +
                               std::to_string(meta_version) +
                               ", this build reads " +
                               std::to_string(kMetaFormatVersion));
  }

  std::unordered_map<std::int64_t, Chunk> chunks;
  {
    const fs::path path = base / "chunks.jsonl";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open chunks.jsonl in " + dir);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const json row = json::parse(line);
        Chunk c;
        c.id = row.at("id").get<std::int64_t>();
        c.doc_id = row.at("doc_id").get<std::string>();
        c.text = row.at("text").get<std::string>();
        c.token_count = row.at("token_count").get<std::size_t>();
        c.paragraph = row.value("paragraph", std::size_t{0});
        c.sentence_begin = row.value("sentence_begin", std::size_t{0});
        c.sentence_end = row.value("sentence_end", std::size_t{0});
        if (!chunks.emplace(c.id, std::move(c)).second) {
          throw IoError("duplicate chunk id in chunks.jsonl line " +
                        std::to_string(line_no));
        }
      } catch (const json::exception& e) {
        throw IoError("chunks.jsonl line " + std::to_string(line_no) +
                      " is malformed: " + e.what());
      }
    }
  }

  const std::string vec_file = (base / "vectors.bin").string();
  std::ifstream in(vec_file, std::ios::binary);
  if (!in) throw IoError("cannot open vectors.bin in " + dir);

  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("vectors.bin has wrong magic (not an index vector file)");
  }
  const auto version = read_raw<std::uint32_t>(in, vec_file, nullptr);
  if (version != kVectorFormatVersion) {
    throw VersionMismatchError("vector file version " +
                               std::to_string(version) +
                               ", this build reads " +
                               std::to_string(kVectorFormatVersion));
  }
  const auto dim = read_raw<std::uint32_t>(in, vec_file, nullptr);
  const auto count = read_raw<std::uint64_t>(in, vec_file, nullptr);
  if (dim == 0) throw IoError("vectors.bin declares dimension 0");

  VectorStore store(dim);
  std::uint64_t hash = kFnvOffsetBasis;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto id = read_raw<std::int64_t>(in, vec_file, &hash);
    Vector vec(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      vec[i] = read_raw<double>(in, vec_file, &hash);
    }
    auto it = chunks.find(id);
    if (it == chunks.end()) {
      throw IoError("vectors.bin id " + std::to_string(id) +
                    " has no chunk in chunks.jsonl");
    }
    store.insert(std::move(it->second), std::move(vec));
    chunks.erase(it);
  }
  const auto stored_hash = read_raw<std::uint64_t>(in, vec_file, nullptr);
  if (stored_hash != hash) {
    throw ChecksumError("vectors.bin checksum mismatch (file corrupted?)");
  }
  if (!chunks.empty()) {
    throw IoError("chunks.jsonl has " + std::to_string(chunks.size()) +
                  " chunk(s) with no vector");
  }

  IndexMeta im;
  try {
    const json& emb = meta.at("embedder");
    im.embedder.kind = embedder_kind_from(emb.at("kind").get<std::string>());
    im.embedder.dimension = emb.at("dimension").get<std::size_t>();
    im.embedder.endpoint = emb.value("endpoint", "");
    im.embedder.model = emb.value("model", "");
    im.embedder.max_in_flight = emb.value("max_in_flight", std::size_t{4});
    im.seg_model_fingerprint = meta.value("seg_model_fingerprint", "");
    if (meta.contains("config_snapshot")) {
      const json& snap = meta["config_snapshot"];
      im.config_snapshot = snap.is_string() ? snap.get<std::string>() : snap.dump();
    }
  } catch (const json::exception& e) {
    throw IoError("meta.json is missing fields: " + std::string(e.what()));
  }
  if (im.embedder.dimension != store.dimension()) {
    throw IoError("meta.json embedder dimension disagrees with vectors.bin");
  }
  store.set_meta(std::move(im));
  return store;
}

}  // namespace sage
