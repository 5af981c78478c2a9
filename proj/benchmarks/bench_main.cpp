// Microbenchmarks for the hot paths: embedding, retrieval, pair scoring
// and selection. Run with --benchmark_filter=... to narrow down.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "sage/chunk_selection.hpp"
#include "sage/embedder.hpp"
#include "sage/random.hpp"
#include "sage/segmenter.hpp"
#include "sage/vector_store.hpp"

namespace {

using namespace sage;

EmbedderSpec hash_embedder(std::size_t dim) {
  EmbedderSpec spec;
  spec.kind = EmbedderKind::reference_hash;
  spec.dimension = dim;
  return spec;
}

std::string sample_sentence(std::mt19937_64& rng, std::size_t words) {
  static const char* stems[] = {"river", "mill", "bridge", "valley",
                                "harvest", "sluice", "field", "wheel"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (!out.empty()) out += ' ';
    out += stems[bounded_rand(rng, 8)];
    out += std::to_string(bounded_rand(rng, 50));
  }
  out += '.';
  return out;
}

void bench_embed_text(benchmark::State& state) {
  const EmbedderSpec spec = hash_embedder(state.range(0));
  std::mt19937_64 rng(1);
  const std::string text = sample_sentence(rng, 24);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed_text(text, spec));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_embed_text)->Arg(64)->Arg(256)->Arg(1024);

void bench_store_query(benchmark::State& state) {
  const std::size_t dim = 128;
  const std::size_t count = state.range(0);
  std::mt19937_64 rng(2);
  VectorStore store(dim);
  for (std::size_t i = 0; i < count; ++i) {
    Chunk chunk;
    chunk.id = static_cast<std::int64_t>(i);
    chunk.text = "c" + std::to_string(i);
    Vector v(dim);
    for (double& x : v) x = uniform_real(rng, -1.0, 1.0);
    store.insert(chunk, v);
  }
  Vector query(dim);
  for (double& x : query) x = uniform_real(rng, -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.query_top_n(query, 20));
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(bench_store_query)->Arg(1000)->Arg(10000)->Arg(50000);

void bench_score_pairs(benchmark::State& state) {
  const EmbedderSpec spec = hash_embedder(64);
  const SegmentationModel model =
      make_segmentation_model(64, FeatureMode::full, 3);
  std::mt19937_64 rng(4);
  std::vector<std::string> pool;
  for (int i = 0; i < 400; ++i) pool.push_back(sample_sentence(rng, 12));
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    pairs.emplace_back(pool[bounded_rand(rng, pool.size())],
                       pool[bounded_rand(rng, pool.size())]);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_pairs(model, pairs, spec));
  }
  state.SetItemsProcessed(state.iterations() * pairs.size());
}
BENCHMARK(bench_score_pairs)->Arg(200)->Arg(2000);

void bench_select_gradient(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<ScoredChunk> ranked(state.range(0));
  double score = 0.95;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    ranked[i] = {static_cast<std::int64_t>(i), score, score};
    score *= uniform_real(rng, 0.7, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_gradient(ranked, 7, 0.3));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_select_gradient)->Arg(20)->Arg(200);

void bench_segment_corpus(benchmark::State& state) {
  const EmbedderSpec spec = hash_embedder(64);
  const SegmentationModel model =
      make_segmentation_model(64, FeatureMode::full, 6);
  std::mt19937_64 rng(7);
  std::string doc;
  for (int p = 0; p < 8; ++p) {
    std::string para;
    for (int s = 0; s < 10; ++s) {
      if (!para.empty()) para += ' ';
      para += sample_sentence(rng, 14);
    }
    doc += para + "\n";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        segment_corpus(doc, "bench", model, spec, 0.55, 400));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_segment_corpus);

}  // namespace

BENCHMARK_MAIN();
