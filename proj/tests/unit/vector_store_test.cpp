#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sage/embedder.hpp"
#include "sage/error.hpp"
#include "sage/vector_store.hpp"
#include "support/fixtures.hpp"

using namespace sage;
using sage_test::TempDir;

namespace {

Chunk make_chunk(std::int64_t id, const std::string& text = "") {
  Chunk c;
  c.id = id;
  c.doc_id = "doc";
  c.text = text.empty() ? ("chunk " + std::to_string(id)) : text;
  c.token_count = 2;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_SUITE("vector store") {

TEST_CASE("insert, lookup and ids") {
  VectorStore store(3);
  store.insert(make_chunk(10), {1, 0, 0});
  store.insert(make_chunk(7), {0, 1, 0});
  CHECK(store.size() == 2);
  CHECK(store.contains(10));
  CHECK(!store.contains(11));
  CHECK(store.chunk(7).text == "chunk 7");
  CHECK(store.vector(10) == Vector{1, 0, 0});
  CHECK(store.ids() == std::vector<std::int64_t>{10, 7});
}

TEST_CASE("duplicate ids and wrong dimensions are refused") {
  VectorStore store(3);
  store.insert(make_chunk(1), {1, 0, 0});
  CHECK_THROWS_AS(store.insert(make_chunk(1), {0, 1, 0}), ConflictError);
  CHECK_THROWS_AS(store.insert(make_chunk(2), {1, 0}), ContractViolation);
}

TEST_CASE("query ranks by cosine, not by magnitude") {
  VectorStore store(2);
  store.insert(make_chunk(1), {100.0, 0.0});   // same direction, big norm
  store.insert(make_chunk(2), {0.9, 0.1});     // close direction
  store.insert(make_chunk(3), {0.0, 1.0});     // orthogonal
  const auto hits = store.query_top_n({1.0, 0.0}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].chunk_id == 1);
  CHECK(hits[0].similarity == doctest::Approx(1.0));
  CHECK(hits[1].chunk_id == 2);
  CHECK(hits[2].chunk_id == 3);
  CHECK(hits[2].similarity == doctest::Approx(0.0));
}

TEST_CASE("ties break by ascending chunk id") {
  VectorStore store(2);
  store.insert(make_chunk(30), {1.0, 0.0});
  store.insert(make_chunk(10), {2.0, 0.0});
  store.insert(make_chunk(20), {3.0, 0.0});
  const auto hits = store.query_top_n({1.0, 0.0}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].chunk_id == 10);
  CHECK(hits[1].chunk_id == 20);
  CHECK(hits[2].chunk_id == 30);
}

TEST_CASE("n larger than the store returns everything") {
  VectorStore store(2);
  store.insert(make_chunk(1), {1.0, 0.0});
  CHECK(store.query_top_n({1.0, 0.0}, 50).size() == 1);
}

TEST_CASE("empty store and bad arguments") {
  VectorStore store(2);
  CHECK_THROWS_AS(store.query_top_n({1.0, 0.0}, 5), EmptyIndexError);
  store.insert(make_chunk(1), {1.0, 0.0});
  CHECK_THROWS_AS(store.query_top_n({1.0, 0.0}, 0), ContractViolation);
  CHECK_THROWS_AS(store.query_top_n({1.0, 0.0, 0.0}, 1), ContractViolation);
  CHECK_THROWS_AS(VectorStore(0), ContractViolation);
}

TEST_CASE("zero vectors match nothing") {
  VectorStore store(2);
  store.insert(make_chunk(1), {0.0, 0.0});
  store.insert(make_chunk(2), {0.5, 0.5});
  const auto hits = store.query_top_n({1.0, 0.0}, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].chunk_id == 2);
  CHECK(hits[1].chunk_id == 1);
  CHECK(hits[1].similarity == 0.0);

  const auto blank = store.query_top_n({0.0, 0.0}, 2);
  CHECK(blank[0].similarity == 0.0);
  CHECK(blank[1].similarity == 0.0);
}

TEST_CASE("save and load answer queries identically") {
  TempDir dir;
  VectorStore store(4);
  std::mt19937_64 rng(55);
  for (int i = 0; i < 40; ++i) {
    Vector v(4);
    for (double& x : v) x = uniform_real(rng, -1.0, 1.0);
    auto c = make_chunk(i, "text number " + std::to_string(i));
    c.paragraph = i % 5;
    c.sentence_begin = i;
    c.sentence_end = i + 2;
    store.insert(std::move(c), std::move(v));
  }
  IndexMeta meta;
  meta.embedder.dimension = 4;
  meta.seg_model_fingerprint = "abc123";
  meta.config_snapshot = "{\"ss\":0.55}";
  store.set_meta(meta);
  store.save(dir.str());

  const auto loaded = VectorStore::load(dir.str());
  CHECK(loaded.size() == store.size());
  CHECK(loaded.dimension() == store.dimension());
  CHECK(loaded.meta().embedder == store.meta().embedder);
  CHECK(loaded.meta().seg_model_fingerprint == "abc123");
  for (auto id : store.ids()) {
    CHECK(loaded.vector(id) == store.vector(id));
    CHECK(loaded.chunk(id).text == store.chunk(id).text);
    CHECK(loaded.chunk(id).sentence_end == store.chunk(id).sentence_end);
  }

  Vector q = {0.3, -0.2, 0.9, 0.1};
  const auto a = store.query_top_n(q, 10);
  const auto b = loaded.query_top_n(q, 10);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].chunk_id == b[i].chunk_id);
    CHECK(a[i].similarity == b[i].similarity);
  }
}

TEST_CASE("identical stores persist identical bytes") {
  TempDir d1, d2;
  for (const auto& dir : {d1.str(), d2.str()}) {
    VectorStore store(2);
    store.insert(make_chunk(1), {0.25, 0.75});
    store.insert(make_chunk(2), {0.5, 0.5});
    store.save(dir);
  }
  CHECK(slurp(d1.file("vectors.bin")) == slurp(d2.file("vectors.bin")));
  CHECK(slurp(d1.file("chunks.jsonl")) == slurp(d2.file("chunks.jsonl")));
  CHECK(slurp(d1.file("meta.json")) == slurp(d2.file("meta.json")));
}

TEST_CASE("flipped payload byte fails the checksum") {
  TempDir dir;
  VectorStore store(2);
  store.insert(make_chunk(1), {0.25, 0.75});
  store.save(dir.str());

  std::string bytes = slurp(dir.file("vectors.bin"));
  // Header is 24 bytes, then an 8-byte id; flip inside the first double.
  REQUIRE(bytes.size() > 40);
  bytes[35] = static_cast<char>(bytes[35] ^ 0x40);
  sage_test::write_file(dir.file("vectors.bin"), bytes);

  CHECK_THROWS_AS(VectorStore::load(dir.str()), ChecksumError);
}

TEST_CASE("truncated vector file is an io error") {
  TempDir dir;
  VectorStore store(2);
  store.insert(make_chunk(1), {0.25, 0.75});
  store.save(dir.str());
  const std::string bytes = slurp(dir.file("vectors.bin"));
  sage_test::write_file(dir.file("vectors.bin"),
                        bytes.substr(0, bytes.size() - 6));
  CHECK_THROWS_AS(VectorStore::load(dir.str()), IoError);
}

TEST_CASE("metadata from a future format is refused") {
  TempDir dir;
  VectorStore store(2);
  store.insert(make_chunk(1), {0.25, 0.75});
  store.save(dir.str());
  std::string meta = slurp(dir.file("meta.json"));
  const std::string needle = "\"format_version\": 1";
  const auto pos = meta.find(needle);
  REQUIRE(pos != std::string::npos);
  meta.replace(pos, needle.size(), "\"format_version\": 2");
  sage_test::write_file(dir.file("meta.json"), meta);
  CHECK_THROWS_AS(VectorStore::load(dir.str()), VersionMismatchError);
}

TEST_CASE("chunk and vector files must describe the same ids") {
  TempDir dir;
  VectorStore store(2);
  store.insert(make_chunk(1), {0.25, 0.75});
  store.insert(make_chunk(2), {0.5, 0.5});
  store.save(dir.str());

  // Drop chunk 2's row: its vector now has no chunk.
  std::string chunks = slurp(dir.file("chunks.jsonl"));
  const auto cut = chunks.find('\n');
  REQUIRE(cut != std::string::npos);
  sage_test::write_file(dir.file("chunks.jsonl"), chunks.substr(0, cut + 1));
  CHECK_THROWS_AS(VectorStore::load(dir.str()), IoError);
}

TEST_CASE("missing directory is an io error") {
  CHECK_THROWS_AS(VectorStore::load("/nonexistent/index/dir"), IoError);
}

}  // TEST_SUITE
