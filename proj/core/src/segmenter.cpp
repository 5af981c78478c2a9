#include "sage/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string_view>
#include <thread>
#include <unordered_map>

#include "sage/error.hpp"
#include "sage/random.hpp"

namespace sage {

// ---------------------------------------------------------------------------
// Sentence splitting

namespace {

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space_char(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// Lowercased tokens that end with '.' mid-text without ending a sentence.
const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> abbrev = {
      "dr",  "mr",  "mrs", "ms",  "prof",   "st",  "jr",  "sr",
      "vs",  "etc", "fig", "inc", "ltd",    "al",  "cf",  "e.g",
      "i.e", "eg",  "ie",  "u.s", "u.k",    "approx"};
  return abbrev;
}

// The word immediately before text[dot], lowercased. Letters, digits and
// embedded dots count as part of the word ("e.g", "u.s").
std::string word_before(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0) {
    const char c = text[start - 1];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.') {
      --start;
    } else {
      break;
    }
  }
  std::string word(text.substr(start, dot - start));
  for (char& c : word) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  // Inner dots stay ("e.g"), a leading one does not (from "... end. Next").
  while (!word.empty() && word.front() == '.') word.erase(word.begin());
  return word;
}

bool suppressed_period(std::string_view text, std::size_t dot) {
  const std::string word = word_before(text, dot);
  if (word.empty()) return false;
  // Single-letter words are treated as initials ("J. Smith").
  if (word.size() == 1 &&
      std::isalpha(static_cast<unsigned char>(word[0])) != 0) {
    return true;
  }
  return abbreviations().count(word) > 0;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space_char(s[b])) ++b;
  while (e > b && is_space_char(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<SentenceSpan> split_sentence_spans(std::string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    // Swallow a whole run like "..." or "?!". The abbreviation test looks at
    // the word before the first terminator of the run.
    const std::size_t first = i;
    while (i < n && is_terminator(text[i])) ++i;
    if (i >= n) break;  // trailing terminators: the final span closes below
    if (!is_space_char(text[i])) continue;
    if (text[first] == '.' && i == first + 1 &&
        suppressed_period(text, first)) {
      continue;
    }
    // Boundary. The span keeps the whitespace so spans stay a partition.
    while (i < n && is_space_char(text[i])) ++i;
    spans.push_back({start, i});
    start = i;
  }
  if (start < n || (n > 0 && spans.empty())) {
    spans.push_back({start, n});
  }
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const SentenceSpan& span : split_sentence_spans(text)) {
    std::string sentence =
        trim_copy(text.substr(span.begin, span.end - span.begin));
    // Whitespace-only spans (blank input, stray trailing space) are not
    // sentences; downstream stages assume every sentence has text.
    if (!sentence.empty()) out.push_back(std::move(sentence));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training pairs

std::vector<SentencePair> collect_pairs(
    const std::vector<std::string>& paragraphs, double negative_ratio,
    std::uint64_t seed) {
  if (!(negative_ratio >= 0.0) || !std::isfinite(negative_ratio)) {
    throw ContractViolation("negative_ratio must be finite and >= 0");
  }

  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(paragraphs.size());
  for (const auto& p : paragraphs) sentences.push_back(split_sentences(p));

  std::vector<SentencePair> pairs;
  for (const auto& para : sentences) {
    for (std::size_t i = 0; i + 1 < para.size(); ++i) {
      pairs.push_back({para[i], para[i + 1], 1.0});
    }
  }

  const auto negatives = static_cast<std::size_t>(
      std::llround(negative_ratio * static_cast<double>(pairs.size())));
  std::mt19937_64 rng(seed);

  if (negatives > 0) {
    // Usable = can donate a sentence to a cross-paragraph pair.
    std::vector<std::size_t> usable;
    for (std::size_t p = 0; p < sentences.size(); ++p) {
      if (!sentences[p].empty()) usable.push_back(p);
    }
    if (usable.size() < 2) {
      throw InsufficientDataError(
          "negative sampling needs at least two non-empty paragraphs, got " +
          std::to_string(usable.size()));
    }
    for (std::size_t k = 0; k < negatives; ++k) {
      const std::size_t a =
          usable[static_cast<std::size_t>(bounded_rand(rng, usable.size()))];
      std::size_t b = a;
      while (b == a) {
        b = usable[static_cast<std::size_t>(bounded_rand(rng, usable.size()))];
      }
      const auto& sa =
          sentences[a][static_cast<std::size_t>(
              bounded_rand(rng, sentences[a].size()))];
      const auto& sb =
          sentences[b][static_cast<std::size_t>(
              bounded_rand(rng, sentences[b].size()))];
      pairs.push_back({sa, sb, 0.0});
    }
  }

  deterministic_shuffle(pairs, rng);
  return pairs;
}

// ---------------------------------------------------------------------------
// Features

std::size_t feature_dimension(FeatureMode mode, std::size_t embed_dim) {
  switch (mode) {
    case FeatureMode::pair_only:
      return 2 * embed_dim;
    case FeatureMode::pair_diff:
    case FeatureMode::pair_prod:
      return 3 * embed_dim;
    case FeatureMode::full:
      return 4 * embed_dim;
  }
  throw ContractViolation("unknown feature mode");
}

const char* to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::pair_only:
      return "pair_only";
    case FeatureMode::pair_diff:
      return "pair_diff";
    case FeatureMode::pair_prod:
      return "pair_prod";
    case FeatureMode::full:
      return "full";
  }
  return "unknown";
}

FeatureMode feature_mode_from_string(const std::string& name) {
  if (name == "pair_only") return FeatureMode::pair_only;
  if (name == "pair_diff") return FeatureMode::pair_diff;
  if (name == "pair_prod") return FeatureMode::pair_prod;
  if (name == "full") return FeatureMode::full;
  throw ContractViolation("unknown feature mode: " + name);
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ContractViolation("unknown activation: " + name);
}

std::vector<double> build_features(const Vector& x1, const Vector& x2,
                                   FeatureMode mode) {
  if (x1.empty() || x1.size() != x2.size()) {
    throw ContractViolation("pair features need equal nonzero dimensions");
  }
  const std::size_t d = x1.size();
  std::vector<double> f;
  f.reserve(feature_dimension(mode, d));
  f.insert(f.end(), x1.begin(), x1.end());
  f.insert(f.end(), x2.begin(), x2.end());
  if (mode == FeatureMode::pair_diff || mode == FeatureMode::full) {
    for (std::size_t i = 0; i < d; ++i) f.push_back(x1[i] - x2[i]);
  }
  if (mode == FeatureMode::pair_prod || mode == FeatureMode::full) {
    for (std::size_t i = 0; i < d; ++i) f.push_back(x1[i] * x2[i]);
  }
  return f;
}

std::vector<double> augment_features(const Vector& x1, const Vector& x2) {
  return build_features(x1, x2, FeatureMode::full);
}

// ---------------------------------------------------------------------------
// Model

namespace {

void validate_shape(const SegmentationModel& m) {
  if (m.layer_dims.size() < 2) {
    throw CorruptModelError("model needs at least input and output dims");
  }
  const std::size_t layers = m.layer_dims.size() - 1;
  if (m.activations.size() != layers || m.weights.size() != layers ||
      m.biases.size() != layers) {
    throw CorruptModelError("layer count mismatch between dims/activations/params");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = m.layer_dims[l];
    const std::size_t out = m.layer_dims[l + 1];
    if (in == 0 || out == 0) throw CorruptModelError("zero-width layer");
    if (m.weights[l].size() != in * out || m.biases[l].size() != out) {
      throw CorruptModelError("parameter block size mismatch at layer " +
                              std::to_string(l));
    }
  }
}

void validate_finite(const SegmentationModel& m) {
  for (const auto& block : m.weights) {
    for (double w : block) {
      if (!std::isfinite(w)) throw CorruptModelError("non-finite weight");
    }
  }
  for (const auto& block : m.biases) {
    for (double b : block) {
      if (!std::isfinite(b)) throw CorruptModelError("non-finite bias");
    }
  }
}

bool params_finite(const SegmentationModel& m) {
  for (const auto& block : m.weights) {
    for (double w : block) {
      if (!std::isfinite(w)) return false;
    }
  }
  for (const auto& block : m.biases) {
    for (double b : block) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: {
      // Numerically stable; clamped away from exact 0/1 so downstream code
      // can take ratios and logs without special cases.
      double y;
      if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
      } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
      }
      return std::clamp(y, 1e-12, 1.0 - 1e-12);
    }
    case Activation::identity:
      return x;
  }
  return x;
}

// Derivative of the activation expressed through its output value.
double activation_grad(Activation a, double y) {
  switch (a) {
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return y * (1.0 - y);
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

// No validation: callers check shape/finiteness once and reuse.
// acts[l] receives layer l's output.
double forward_raw(const SegmentationModel& m, std::span<const double> x,
                   std::vector<std::vector<double>>& acts) {
  const std::size_t layers = m.layer_count();
  acts.resize(layers);
  std::span<const double> in = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = m.layer_dims[l + 1];
    const std::size_t cols = m.layer_dims[l];
    auto& out = acts[l];
    out.assign(rows, 0.0);
    const double* w = m.weights[l].data();
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = m.biases[l][r];
      const double* wr = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) sum += wr[c] * in[c];
      out[r] = apply_activation(m.activations[l], sum);
    }
    in = out;
  }
  return acts.back().back();
}

ModelGradients zero_gradients(const SegmentationModel& m) {
  ModelGradients g;
  g.weights.reserve(m.weights.size());
  g.biases.reserve(m.biases.size());
  for (const auto& w : m.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : m.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

}  // namespace

SegmentationModel make_mlp(std::vector<std::size_t> layer_dims,
                           std::vector<Activation> activations,
                           std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw ContractViolation("make_mlp needs at least input and output dims");
  }
  if (activations.size() != layer_dims.size() - 1) {
    throw ContractViolation("make_mlp needs one activation per layer");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ContractViolation("make_mlp layer width must be positive");
  }

  SegmentationModel m;
  m.layer_dims = std::move(layer_dims);
  m.activations = std::move(activations);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    const std::size_t in = m.layer_dims[l];
    const std::size_t out = m.layer_dims[l + 1];
    const double limit = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (double& x : w) x = uniform_real(rng, -limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  return m;
}

SegmentationModel make_segmentation_model(std::size_t embed_dim,
                                          FeatureMode mode,
                                          std::uint64_t seed) {
  if (embed_dim == 0) {
    throw ContractViolation("embedding dimension must be positive");
  }
  SegmentationModel m =
      make_mlp({feature_dimension(mode, embed_dim), 256, 64, 1},
               {Activation::relu, Activation::relu, Activation::sigmoid}, seed);
  m.embed_dim = embed_dim;
  m.feature_mode = mode;
  return m;
}

double forward(const SegmentationModel& model,
               std::span<const double> features) {
  validate_shape(model);
  validate_finite(model);
  if (features.size() != model.input_dimension()) {
    throw ContractViolation("forward expected " +
                            std::to_string(model.input_dimension()) +
                            " features, got " +
                            std::to_string(features.size()));
  }
  std::vector<std::vector<double>> acts;
  return forward_raw(model, features, acts);
}

double mse_loss(const SegmentationModel& model,
                const std::vector<std::vector<double>>& features,
                const std::vector<double>& labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw ContractViolation("mse_loss needs matching nonzero features/labels");
  }
  validate_shape(model);
  std::vector<std::vector<double>> acts;
  double sum = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != model.input_dimension()) {
      throw ContractViolation("feature row " + std::to_string(i) +
                              " has wrong dimension");
    }
    const double y = forward_raw(model, features[i], acts);
    const double diff = y - labels[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(features.size());
}

std::pair<double, ModelGradients> mse_loss_and_gradients(
    const SegmentationModel& model,
    const std::vector<std::vector<double>>& features,
    const std::vector<double>& labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw ContractViolation("gradient pass needs matching nonzero features/labels");
  }
  validate_shape(model);

  const std::size_t layers = model.layer_count();
  const double inv_n = 1.0 / static_cast<double>(features.size());
  ModelGradients grads = zero_gradients(model);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, delta_prev;
  double loss_sum = 0.0;

  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    if (x.size() != model.input_dimension()) {
      throw ContractViolation("feature row " + std::to_string(i) +
                              " has wrong dimension");
    }
    const double y = forward_raw(model, x, acts);
    const double diff = y - labels[i];
    loss_sum += diff * diff;

    // d(mean squared error)/d(output), batch mean folded in.
    delta.assign(1, 2.0 * diff * inv_n *
                        activation_grad(model.activations.back(), y));

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t rows = model.layer_dims[l + 1];
      const std::size_t cols = model.layer_dims[l];
      const std::span<const double> input =
          l == 0 ? std::span<const double>(x)
                 : std::span<const double>(acts[l - 1]);
      double* gw = grads.weights[l].data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double dr = delta[r];
        if (dr == 0.0) continue;
        grads.biases[l][r] += dr;
        double* gwr = gw + r * cols;
        for (std::size_t c = 0; c < cols; ++c) gwr[c] += dr * input[c];
      }
      if (l == 0) break;
      delta_prev.assign(cols, 0.0);
      const double* w = model.weights[l].data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double dr = delta[r];
        if (dr == 0.0) continue;
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) delta_prev[c] += wr[c] * dr;
      }
      for (std::size_t c = 0; c < cols; ++c) {
        delta_prev[c] *=
            activation_grad(model.activations[l - 1], acts[l - 1][c]);
      }
      std::swap(delta, delta_prev);
    }
  }

  return {loss_sum * inv_n, std::move(grads)};
}

std::vector<double> train_model(
    SegmentationModel& model,
    const std::vector<std::vector<double>>& features,
    const std::vector<double>& labels, const TrainConfig& cfg) {
  if (features.empty() || features.size() != labels.size()) {
    throw ContractViolation("training needs matching nonzero features/labels");
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ContractViolation("learning_rate must be positive and finite");
  }
  if (cfg.batch_size == 0 || cfg.batch_size > features.size()) {
    throw ContractViolation("batch_size must be in [1, dataset size]");
  }
  validate_shape(model);
  validate_finite(model);

  const std::size_t n = features.size();
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> epoch_losses;
  epoch_losses.reserve(cfg.epochs);
  std::vector<std::vector<double>> batch_feats;
  std::vector<double> batch_labels;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(n, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, n);
      batch_feats.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch_feats.push_back(features[order[k]]);
        batch_labels.push_back(labels[order[k]]);
      }
      auto [loss, grads] = mse_loss_and_gradients(model, batch_feats, batch_labels);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(
            "loss became non-finite in epoch " + std::to_string(epoch), epoch);
      }
      loss_sum += loss * static_cast<double>(stop - start);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        double* w = model.weights[l].data();
        const double* gw = grads.weights[l].data();
        for (std::size_t k = 0; k < model.weights[l].size(); ++k) {
          w[k] -= cfg.learning_rate * gw[k];
        }
        double* b = model.biases[l].data();
        const double* gb = grads.biases[l].data();
        for (std::size_t k = 0; k < model.biases[l].size(); ++k) {
          b[k] -= cfg.learning_rate * gb[k];
        }
      }
    }
    if (!params_finite(model)) {
      throw TrainingDivergedError(
          "parameters became non-finite in epoch " + std::to_string(epoch),
          epoch);
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  return epoch_losses;
}

SegmentationModel train(const std::vector<SentencePair>& pairs,
                        const EmbedderSpec& embedder, const TrainConfig& cfg) {
  if (pairs.empty()) throw ContractViolation("no training pairs");
  for (const auto& p : pairs) {
    if (p.label != 0.0 && p.label != 1.0) {
      throw ContractViolation("pair labels must be exactly 0 or 1");
    }
  }

  // The embedder is a fixed feature extractor here; only MLP weights learn.
  // Each distinct sentence is embedded once.
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> unique_texts;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = index.try_emplace(s, unique_texts.size());
    if (inserted) unique_texts.push_back(s);
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
  pair_idx.reserve(pairs.size());
  for (const auto& p : pairs) {
    pair_idx.emplace_back(intern(p.first), intern(p.second));
  }
  const std::vector<Vector> embeddings = embed_batch(unique_texts, embedder);

  std::vector<std::vector<double>> features;
  features.reserve(pairs.size());
  std::vector<double> labels;
  labels.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    features.push_back(build_features(embeddings[pair_idx[i].first],
                                      embeddings[pair_idx[i].second],
                                      cfg.feature_mode));
    labels.push_back(pairs[i].label);
  }

  SegmentationModel model =
      make_segmentation_model(embedder.dimension, cfg.feature_mode, cfg.seed);
  TrainConfig effective = cfg;
  // Small datasets just shrink the batch instead of erroring out.
  effective.batch_size = std::min(cfg.batch_size, features.size());
  train_model(model, features, labels, effective);
  return model;
}

double score_pair(const SegmentationModel& model, const std::string& first,
                  const std::string& second, const EmbedderSpec& embedder) {
  if (model.embed_dim != 0 && model.embed_dim != embedder.dimension) {
    throw ConflictError("model was trained on dimension " +
                        std::to_string(model.embed_dim) +
                        ", embedder produces " +
                        std::to_string(embedder.dimension));
  }
  const Vector x1 = embed_text(first, embedder);
  const Vector x2 = embed_text(second, embedder);
  return forward(model, build_features(x1, x2, model.feature_mode));
}

std::vector<double> score_pairs(
    const SegmentationModel& model,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const EmbedderSpec& embedder, unsigned threads) {
  if (model.embed_dim != 0 && model.embed_dim != embedder.dimension) {
    throw ConflictError("model was trained on dimension " +
                        std::to_string(model.embed_dim) +
                        ", embedder produces " +
                        std::to_string(embedder.dimension));
  }
  validate_shape(model);
  validate_finite(model);
  if (pairs.empty()) return {};

  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> unique_texts;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = index.try_emplace(s, unique_texts.size());
    if (inserted) unique_texts.push_back(s);
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
  pair_idx.reserve(pairs.size());
  for (const auto& [a, b] : pairs) pair_idx.emplace_back(intern(a), intern(b));
  const std::vector<Vector> embeddings = embed_batch(unique_texts, embedder);

  std::vector<double> scores(pairs.size(), 0.0);
  unsigned workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, pairs.size()));

  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<std::vector<double>> acts;
    for (std::size_t i = begin; i < end; ++i) {
      const auto f = build_features(embeddings[pair_idx[i].first],
                                    embeddings[pair_idx[i].second],
                                    model.feature_mode);
      scores[i] = forward_raw(model, f, acts);
    }
  };

  if (workers <= 1) {
    run(0, pairs.size());
    return scores;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t per = (pairs.size() + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * per;
    const std::size_t end = std::min(begin + per, pairs.size());
    if (begin >= end) break;
    pool.emplace_back(run, begin, end);
  }
  for (auto& t : pool) t.join();
  return scores;
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<CoarseChunk> segment_coarse(
    const std::vector<std::string>& sentences, std::size_t max_tokens,
    const Tokenizer& tokenizer) {
  if (max_tokens < 16) {
    throw ContractViolation("coarse token budget must be >= 16");
  }
  std::vector<CoarseChunk> chunks;
  CoarseChunk current;
  bool open = false;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::size_t t = tokenizer(sentences[i]).size();
    if (open && current.token_count + t > max_tokens) {
      chunks.push_back(current);
      open = false;
    }
    if (!open) {
      current = {i, i + 1, t};
      open = true;
    } else {
      current.sentence_end = i + 1;
      current.token_count += t;
    }
    if (current.token_count >= max_tokens) {
      chunks.push_back(current);
      open = false;
    }
  }
  if (open) chunks.push_back(current);
  return chunks;
}

std::vector<Chunk> segment_corpus(const std::string& document_text,
                                  const std::string& doc_id,
                                  const SegmentationModel& model,
                                  const EmbedderSpec& embedder, double ss,
                                  std::size_t coarse_max_tokens,
                                  std::int64_t first_id) {
  if (!(ss >= 0.0 && ss <= 1.0)) {
    throw ContractViolation("segmentation threshold must be in [0, 1]");
  }
  if (coarse_max_tokens < 16) {
    throw ContractViolation("coarse token budget must be >= 16");
  }

  // Paragraphs are non-empty lines.
  std::vector<std::string> paragraphs;
  {
    std::size_t start = 0;
    while (start <= document_text.size()) {
      std::size_t nl = document_text.find('\n', start);
      if (nl == std::string::npos) nl = document_text.size();
      std::string line = trim_copy(
          std::string_view(document_text).substr(start, nl - start));
      if (!line.empty()) paragraphs.push_back(std::move(line));
      start = nl + 1;
    }
  }

  struct ParaPlan {
    std::vector<std::string> sentences;
    std::vector<CoarseChunk> coarse;
  };
  std::vector<ParaPlan> plans;
  plans.reserve(paragraphs.size());

  std::vector<std::pair<std::string, std::string>> boundary_pairs;
  // (paragraph, sentence index i) for the pair (i-1, i), in score order.
  std::vector<std::pair<std::size_t, std::size_t>> boundary_at;

  for (std::size_t p = 0; p < paragraphs.size(); ++p) {
    ParaPlan plan;
    plan.sentences = split_sentences(paragraphs[p]);
    plan.coarse = segment_coarse(plan.sentences, coarse_max_tokens);
    for (const CoarseChunk& cc : plan.coarse) {
      for (std::size_t i = cc.sentence_begin + 1; i < cc.sentence_end; ++i) {
        boundary_pairs.emplace_back(plan.sentences[i - 1], plan.sentences[i]);
        boundary_at.emplace_back(p, i);
      }
    }
    plans.push_back(std::move(plan));
  }

  // One batched scoring pass per document.
  std::vector<double> scores;
  if (!boundary_pairs.empty()) {
    scores = score_pairs(model, boundary_pairs, embedder);
  }
  // score_for[p][i]: score of the pair ending at sentence i of paragraph p.
  std::vector<std::unordered_map<std::size_t, double>> score_for(plans.size());
  for (std::size_t k = 0; k < boundary_at.size(); ++k) {
    score_for[boundary_at[k].first][boundary_at[k].second] = scores[k];
  }

  std::vector<Chunk> out;
  std::int64_t next_id = first_id;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const ParaPlan& plan = plans[p];
    for (const CoarseChunk& cc : plan.coarse) {
      std::size_t start = cc.sentence_begin;
      for (std::size_t i = cc.sentence_begin + 1; i <= cc.sentence_end; ++i) {
        const bool close =
            i == cc.sentence_end || score_for[p].at(i) < ss;
        if (!close) continue;
        std::string text;
        for (std::size_t s = start; s < i; ++s) {
          if (!text.empty()) text += ' ';
          text += plan.sentences[s];
        }
        Chunk chunk;
        chunk.id = next_id++;
        chunk.doc_id = doc_id;
        chunk.token_count = count_tokens(text);
        chunk.text = std::move(text);
        chunk.paragraph = p;
        chunk.sentence_begin = start;
        chunk.sentence_end = i;
        out.push_back(std::move(chunk));
        start = i;
      }
    }
  }
  return out;
}

}  // namespace sage
