#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sage/chunk.hpp"
#include "sage/embedder.hpp"
#include "sage/tokenizer.hpp"

namespace sage {

// ---------------------------------------------------------------------------
// Sentence splitting

/// Half-open byte range into the original text. Spans returned by
/// split_sentence_spans partition the input exactly: concatenating
/// text[begin, end) over all spans reproduces the input byte for byte.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<SentenceSpan> split_sentence_spans(std::string_view text);

/// Sentence texts with surrounding whitespace trimmed. Boundaries are ., !
/// or ? followed by whitespace; common abbreviations ("Dr.", "e.g.") and
/// single-letter initials do not end a sentence. Text without a terminator
/// is a single sentence. Never throws.
std::vector<std::string> split_sentences(std::string_view text);

// ---------------------------------------------------------------------------
// Training data

struct SentencePair {
  std::string first;
  std::string second;
  /// 1.0 = consecutive in the source, 0.0 = sampled negative.
  double label = 0.0;
};

/// Build a labeled pair dataset from paragraphs. Positives are every
/// adjacent sentence pair within a paragraph; negatives are
/// round(negative_ratio * positives) random non-adjacent cross-paragraph
/// pairs. The result is shuffled. Throws InsufficientDataError when
/// negatives are requested but fewer than two paragraphs exist.
std::vector<SentencePair> collect_pairs(
    const std::vector<std::string>& paragraphs, double negative_ratio,
    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pair scoring model

enum class FeatureMode {
  pair_only,  // [x1; x2]
  pair_diff,  // [x1; x2; x1 - x2]
  pair_prod,  // [x1; x2; x1 * x2]
  full,       // [x1; x2; x1 - x2; x1 * x2]
};

std::size_t feature_dimension(FeatureMode mode, std::size_t embed_dim);

const char* to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

/// Concatenated pair features for the given mode. Both embeddings must have
/// the same nonzero dimension.
std::vector<double> build_features(const Vector& x1, const Vector& x2,
                                   FeatureMode mode);

/// The canonical 4-block feature map [x1; x2; x1 - x2; x1 * x2].
std::vector<double> augment_features(const Vector& x1, const Vector& x2);

enum class Activation { relu, sigmoid, identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected feed-forward scorer. Weights are row-major
/// [output x input] per layer. The embedder that produced the inputs is not
/// part of the model; embed_dim + feature_mode just record what the first
/// layer expects so mismatches are caught at load/score time.
struct SegmentationModel {
  std::size_t embed_dim = 0;
  FeatureMode feature_mode = FeatureMode::full;
  std::vector<std::size_t> layer_dims;   // [input, hidden..., output]
  std::vector<Activation> activations;   // one per layer transition
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t input_dimension() const { return layer_dims.front(); }
  std::size_t layer_count() const { return weights.size(); }
};

/// The standard scorer shape: features -> 256 -> 64 -> 1, ReLU inside,
/// sigmoid output. Weights initialized uniformly in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
SegmentationModel make_segmentation_model(std::size_t embed_dim,
                                          FeatureMode mode,
                                          std::uint64_t seed);

/// Arbitrary-shape variant for tests and experiments.
SegmentationModel make_mlp(std::vector<std::size_t> layer_dims,
                           std::vector<Activation> activations,
                           std::uint64_t seed);

/// Single forward pass. Validates feature size against the model and that
/// all parameters are finite (CorruptModelError otherwise).
double forward(const SegmentationModel& model, std::span<const double> features);

struct ModelGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

double mse_loss(const SegmentationModel& model,
                const std::vector<std::vector<double>>& features,
                const std::vector<double>& labels);

/// Mean loss over the batch plus d(loss)/d(param) averaged the same way.
std::pair<double, ModelGradients> mse_loss_and_gradients(
    const SegmentationModel& model,
    const std::vector<std::vector<double>>& features,
    const std::vector<double>& labels);

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  FeatureMode feature_mode = FeatureMode::full;
};

/// Mini-batch gradient descent on an existing model. Returns the mean
/// training loss per epoch. Batches are drawn from a per-epoch shuffle
/// seeded by cfg.seed, so reruns are bit-identical. Zero epochs is a no-op.
/// batch_size must not exceed the dataset size. Throws
/// TrainingDivergedError as soon as loss or any parameter goes non-finite.
std::vector<double> train_model(
    SegmentationModel& model,
    const std::vector<std::vector<double>>& features,
    const std::vector<double>& labels, const TrainConfig& cfg);

/// End-to-end: embed pair sentences (embedder stays frozen), build features
/// per cfg.feature_mode, make a fresh standard model and train it.
SegmentationModel train(const std::vector<SentencePair>& pairs,
                        const EmbedderSpec& embedder, const TrainConfig& cfg);

/// P(same chunk) for one sentence pair, in [0, 1].
double score_pair(const SegmentationModel& model, const std::string& first,
                  const std::string& second, const EmbedderSpec& embedder);

/// Batched score_pair. Embeds each distinct sentence once and fans the
/// forward passes out over `threads` workers (0 = hardware concurrency).
/// Output order matches input order regardless of thread count.
std::vector<double> score_pairs(
    const SegmentationModel& model,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const EmbedderSpec& embedder, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Model persistence

void save_model(const SegmentationModel& model, const std::string& path);

/// Inverse of save_model. Round-trips exactly: parameters are preserved
/// bit for bit. Throws IoError / VersionMismatchError / CorruptModelError.
SegmentationModel load_model(const std::string& path);

/// Stable hex digest over the serialized model, for index metadata.
std::string model_fingerprint(const SegmentationModel& model);

// ---------------------------------------------------------------------------
// Segmentation

/// Greedy coarse pass: consecutive sentences packed up to max_tokens per
/// chunk (a sentence longer than max_tokens gets a chunk of its own).
/// Returned as sentence index ranges [begin, end).
struct CoarseChunk {
  std::size_t sentence_begin = 0;
  std::size_t sentence_end = 0;
  std::size_t token_count = 0;
};

std::vector<CoarseChunk> segment_coarse(
    const std::vector<std::string>& sentences, std::size_t max_tokens,
    const Tokenizer& tokenizer = default_tokenizer());

/// Two-stage segmentation of one document: paragraphs (non-empty lines) ->
/// sentences -> coarse chunks -> model-scored splits wherever an adjacent
/// pair scores below threshold `ss`. Chunk ids start at first_id and count
/// up in document order. Accepts ss in [0, 1]: 0 keeps every coarse chunk
/// whole, 1 splits at every boundary scored below 1.
std::vector<Chunk> segment_corpus(const std::string& document_text,
                                  const std::string& doc_id,
                                  const SegmentationModel& model,
                                  const EmbedderSpec& embedder, double ss,
                                  std::size_t coarse_max_tokens,
                                  std::int64_t first_id = 0);

}  // namespace sage
