#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sage/embedder.hpp"
#include "sage/error.hpp"
#include "sage/segmenter.hpp"
#include "sage/tokenizer.hpp"
#include "support/fixtures.hpp"

using namespace sage;

namespace {

EmbedderSpec small_embedder() {
  EmbedderSpec spec;
  spec.dimension = 32;
  return spec;
}

/// A sentence of exactly `n` tokens under the default tokenizer (words only,
/// no trailing period, so the count is trivially n).
std::string sentence_of_tokens(std::size_t n, const std::string& word = "tok") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += word + std::to_string(i);
  }
  return out;
}

}  // namespace

TEST_SUITE("sentence splitting") {

TEST_CASE("simple two-sentence split") {
  const auto sentences = split_sentences("A cat. A dog.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0] == "A cat.");
  CHECK(sentences[1] == "A dog.");
}

TEST_CASE("abbreviations do not end sentences") {
  const auto sentences = split_sentences("Dr. Smith left.");
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0] == "Dr. Smith left.");
}

TEST_CASE("question and exclamation marks terminate") {
  const auto sentences = split_sentences("Really? Yes! Fine.");
  REQUIRE(sentences.size() == 3);
  CHECK(sentences[0] == "Really?");
  CHECK(sentences[1] == "Yes!");
}

TEST_CASE("single-letter initials are not boundaries") {
  const auto sentences = split_sentences("J. R. Tolkien wrote it. I read it.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0] == "J. R. Tolkien wrote it.");
}

TEST_CASE("text without a terminator is one sentence") {
  const auto sentences = split_sentences("no punctuation here");
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0] == "no punctuation here");
}

TEST_CASE("empty and blank input") {
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   \n ").empty());
}

TEST_CASE("spans partition the input byte for byte") {
  const std::string text = "  One two. Three!  Four? trailing bits ";
  const auto spans = split_sentence_spans(text);
  REQUIRE(!spans.empty());
  CHECK(spans.front().begin == 0);
  CHECK(spans.back().end == text.size());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    CHECK(spans[i].begin == spans[i - 1].end);
  }
  std::string rebuilt;
  for (const auto& s : spans) rebuilt += text.substr(s.begin, s.end - s.begin);
  CHECK(rebuilt == text);
}

TEST_CASE("terminator runs stay with their sentence") {
  const auto sentences = split_sentences("What?! Next.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0] == "What?!");
}

}  // TEST_SUITE

TEST_SUITE("pair collection") {

TEST_CASE("adjacent pairs from a single paragraph, no negatives") {
  const auto pairs = collect_pairs({"Aa. Bb. Cc."}, 0.0, 7);
  REQUIRE(pairs.size() == 2);
  // Shuffled output; check contents as a set.
  auto has = [&](const std::string& f, const std::string& s) {
    return std::any_of(pairs.begin(), pairs.end(), [&](const SentencePair& p) {
      return p.first == f && p.second == s && p.label == 1.0;
    });
  };
  CHECK(has("Aa.", "Bb."));
  CHECK(has("Bb.", "Cc."));
}

TEST_CASE("ratio 1 matches negatives to positives") {
  const auto pairs =
      collect_pairs({"Aa aa. Bb bb.", "Cc cc. Dd dd."}, 1.0, 11);
  REQUIRE(pairs.size() == 4);
  const auto positives = std::count_if(
      pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 1.0; });
  CHECK(positives == 2);
  // Negatives must pair sentences from different paragraphs.
  for (const auto& p : pairs) {
    if (p.label != 0.0) continue;
    const bool first_para1 = p.first.find("Aa") != std::string::npos ||
                             p.first.find("Bb") != std::string::npos;
    const bool second_para1 = p.second.find("Aa") != std::string::npos ||
                              p.second.find("Bb") != std::string::npos;
    CHECK(first_para1 != second_para1);
  }
}

TEST_CASE("negatives need at least two paragraphs") {
  CHECK_THROWS_AS(collect_pairs({"Aa. Bb. Cc."}, 0.5, 1),
                  InsufficientDataError);
}

TEST_CASE("same seed reproduces the dataset exactly") {
  const std::vector<std::string> paras = {"Aa. Bb. Cc.", "Dd. Ee. Ff.",
                                          "Gg. Hh."};
  const auto a = collect_pairs(paras, 0.7, 99);
  const auto b = collect_pairs(paras, 0.7, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second == b[i].second);
    CHECK(a[i].label == b[i].label);
  }
}

}  // TEST_SUITE

TEST_SUITE("pair features") {

TEST_CASE("full augmentation on unit axes") {
  const std::vector<double> expect = {1, 0, 0, 1, 1, -1, 0, 0};
  CHECK(augment_features({1, 0}, {0, 1}) == expect);
  CHECK(build_features({1, 0}, {0, 1}, FeatureMode::full) == expect);
}

TEST_CASE("each mode has its documented layout") {
  const Vector x1 = {2, 3}, x2 = {5, 7};
  CHECK(build_features(x1, x2, FeatureMode::pair_only) ==
        std::vector<double>{2, 3, 5, 7});
  CHECK(build_features(x1, x2, FeatureMode::pair_diff) ==
        std::vector<double>{2, 3, 5, 7, -3, -4});
  CHECK(build_features(x1, x2, FeatureMode::pair_prod) ==
        std::vector<double>{2, 3, 5, 7, 10, 21});
  CHECK(build_features(x1, x2, FeatureMode::full) ==
        std::vector<double>{2, 3, 5, 7, -3, -4, 10, 21});
}

TEST_CASE("feature dimension per mode") {
  CHECK(feature_dimension(FeatureMode::pair_only, 32) == 64);
  CHECK(feature_dimension(FeatureMode::pair_diff, 32) == 96);
  CHECK(feature_dimension(FeatureMode::pair_prod, 32) == 96);
  CHECK(feature_dimension(FeatureMode::full, 32) == 128);
}

TEST_CASE("mismatched embedding dimensions are rejected") {
  CHECK_THROWS_AS(build_features({1, 2}, {1, 2, 3}, FeatureMode::full),
                  ContractViolation);
}

TEST_CASE("mode names round-trip") {
  for (auto mode : {FeatureMode::pair_only, FeatureMode::pair_diff,
                    FeatureMode::pair_prod, FeatureMode::full}) {
    CHECK(feature_mode_from_string(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(feature_mode_from_string("bogus"), ContractViolation);
}

}  // TEST_SUITE

TEST_SUITE("scoring model") {

TEST_CASE("standard model shape") {
  const auto model = make_segmentation_model(32, FeatureMode::full, 1);
  CHECK(model.embed_dim == 32);
  REQUIRE(model.layer_dims ==
          std::vector<std::size_t>{128, 256, 64, 1});
  REQUIRE(model.activations.size() == 3);
  CHECK(model.activations[0] == Activation::relu);
  CHECK(model.activations[1] == Activation::relu);
  CHECK(model.activations[2] == Activation::sigmoid);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    CHECK(model.weights[l].size() ==
          model.layer_dims[l] * model.layer_dims[l + 1]);
    for (double b : model.biases[l]) CHECK(b == 0.0);
    const double bound = 1.0 / std::sqrt(double(model.layer_dims[l]));
    for (double w : model.weights[l]) {
      CHECK(std::abs(w) <= bound);
    }
  }
}

TEST_CASE("all-zero parameters score one half") {
  auto model = make_mlp({4, 3, 1}, {Activation::relu, Activation::sigmoid}, 5);
  for (auto& block : model.weights) std::fill(block.begin(), block.end(), 0.0);
  for (auto& block : model.biases) std::fill(block.begin(), block.end(), 0.0);
  const std::vector<double> f = {0.3, -0.1, 0.8, 0.2};
  CHECK(forward(model, f) == 0.5);
}

TEST_CASE("forward validates feature size") {
  const auto model = make_mlp({3, 1}, {Activation::sigmoid}, 2);
  const std::vector<double> wrong = {1.0, 2.0};
  CHECK_THROWS_AS(forward(model, wrong), ContractViolation);
}

TEST_CASE("forward rejects non-finite parameters") {
  auto model = make_mlp({2, 1}, {Activation::sigmoid}, 3);
  model.weights[0][0] = std::nan("");
  const std::vector<double> f = {1.0, 1.0};
  CHECK_THROWS_AS(forward(model, f), CorruptModelError);
}

TEST_CASE("same seed builds identical models, different seeds differ") {
  const auto a = make_segmentation_model(16, FeatureMode::full, 7);
  const auto b = make_segmentation_model(16, FeatureMode::full, 7);
  const auto c = make_segmentation_model(16, FeatureMode::full, 8);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
}

TEST_CASE("analytic gradients match finite differences") {
  // Three labeled pairs through a tiny net; every parameter is probed with a
  // central difference and must agree with backprop to 1e-4 relative error.
  auto model = make_mlp({8, 6, 1}, {Activation::relu, Activation::sigmoid}, 17);
  std::mt19937_64 rng(23);
  std::vector<std::vector<double>> features;
  std::vector<double> labels = {1.0, 0.0, 1.0};
  for (int p = 0; p < 3; ++p) {
    std::vector<double> f(8);
    for (double& x : f) x = uniform_real(rng, -1.0, 1.0);
    features.push_back(std::move(f));
  }

  const auto [loss, grads] = mse_loss_and_gradients(model, features, labels);
  CHECK(std::isfinite(loss));

  const double h = 1e-6;
  double max_rel = 0.0;
  auto probe = [&](std::vector<std::vector<double>>& params,
                   const std::vector<std::vector<double>>& grad_block) {
    for (std::size_t l = 0; l < params.size(); ++l) {
      for (std::size_t i = 0; i < params[l].size(); ++i) {
        const double keep = params[l][i];
        params[l][i] = keep + h;
        const double up = mse_loss(model, features, labels);
        params[l][i] = keep - h;
        const double down = mse_loss(model, features, labels);
        params[l][i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = grad_block[l][i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / scale);
      }
    }
  };
  probe(model.weights, grads.weights);
  probe(model.biases, grads.biases);
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("zero epochs is a no-op") {
  auto model = make_mlp({2, 1}, {Activation::sigmoid}, 4);
  const auto before = model.weights;
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 1;
  const auto losses =
      train_model(model, {{1.0, 0.0}}, {1.0}, cfg);
  CHECK(losses.empty());
  CHECK(model.weights == before);
}

TEST_CASE("training lowers the loss on a separable toy set") {
  auto model = make_mlp({2, 4, 1}, {Activation::relu, Activation::sigmoid}, 9);
  std::vector<std::vector<double>> features = {
      {1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0}, {0.1, 0.9}};
  std::vector<double> labels = {1.0, 1.0, 0.0, 0.0};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.5;
  cfg.batch_size = 4;
  const auto losses = train_model(model, features, labels, cfg);
  REQUIRE(losses.size() == 200);
  CHECK(losses.back() < losses.front());
  CHECK(losses.back() < 0.05);
  CHECK(forward(model, features[0]) > 0.5);
  CHECK(forward(model, features[2]) < 0.5);
}

TEST_CASE("training is deterministic in the seed") {
  const auto pairs = sage_test::two_topic_pairs(30, 30, 5, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 8;
  cfg.seed = 42;
  const auto a = train(pairs, small_embedder(), cfg);
  const auto b = train(pairs, small_embedder(), cfg);
  CHECK(a.weights == b.weights);
  CHECK(model_fingerprint(a) == model_fingerprint(b));
}

TEST_CASE("divergence is reported with the epoch") {
  auto model = make_mlp({2, 1}, {Activation::identity, }, 6);
  TrainConfig cfg;
  cfg.epochs = 80;
  cfg.learning_rate = 1e12;
  cfg.batch_size = 1;
  try {
    train_model(model, {{1e3, 1e3}}, {0.0}, cfg);
    FAIL("training should have diverged");
  } catch (const TrainingDivergedError& e) {
    CHECK(e.epoch() >= 1);
  }
}

TEST_CASE("bad train configs are rejected") {
  auto model = make_mlp({2, 1}, {Activation::sigmoid}, 1);
  const std::vector<std::vector<double>> f = {{1.0, 0.0}};
  const std::vector<double> y = {1.0};
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train_model(model, f, y, cfg), ContractViolation);
  cfg.learning_rate = 0.1;
  cfg.batch_size = 2;  // larger than the dataset
  CHECK_THROWS_AS(train_model(model, f, y, cfg), ContractViolation);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_model(model, f, y, cfg), ContractViolation);
}

TEST_CASE("train rejects labels outside {0, 1}") {
  std::vector<SentencePair> pairs = {{"a b", "c d", 0.5}};
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(pairs, small_embedder(), cfg), ContractViolation);
}

TEST_CASE("score_pair stays in [0, 1] and matches scored batches") {
  const auto pairs = sage_test::two_topic_pairs(20, 20, 5, 5);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 8;
  const auto model = train(pairs, small_embedder(), cfg);

  std::vector<std::pair<std::string, std::string>> inputs;
  for (const auto& p : pairs) inputs.emplace_back(p.first, p.second);

  const auto batched = score_pairs(model, inputs, small_embedder(), 4);
  REQUIRE(batched.size() == inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double one =
        score_pair(model, inputs[i].first, inputs[i].second, small_embedder());
    CHECK(one >= 0.0);
    CHECK(one <= 1.0);
    CHECK(batched[i] == one);
  }
}

TEST_CASE("score_pair rejects a model/embedder dimension mismatch") {
  const auto model = make_segmentation_model(16, FeatureMode::full, 2);
  CHECK_THROWS_AS(score_pair(model, "a", "b", small_embedder()),
                  ConflictError);
}

TEST_CASE("thread count does not change scores") {
  const auto pairs = sage_test::two_topic_pairs(40, 40, 6, 8);
  const auto model = make_segmentation_model(32, FeatureMode::full, 3);
  std::vector<std::pair<std::string, std::string>> inputs;
  for (const auto& p : pairs) inputs.emplace_back(p.first, p.second);
  const auto one = score_pairs(model, inputs, small_embedder(), 1);
  const auto many = score_pairs(model, inputs, small_embedder(), 8);
  CHECK(one == many);
}

}  // TEST_SUITE

TEST_SUITE("coarse segmentation") {

TEST_CASE("packs sentences up to the token budget") {
  // Four 100-token sentences into a 400-token budget: one coarse chunk.
  std::vector<std::string> sentences(4, sentence_of_tokens(100));
  const auto chunks = segment_coarse(sentences, 400);
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].sentence_begin == 0);
  CHECK(chunks[0].sentence_end == 4);
  CHECK(chunks[0].token_count == 400);

  // A fifth sentence would exceed the budget and starts a new chunk.
  sentences.push_back(sentence_of_tokens(100));
  const auto five = segment_coarse(sentences, 400);
  REQUIRE(five.size() == 2);
  CHECK(five[0].sentence_end == 4);
  CHECK(five[1].sentence_begin == 4);
}

TEST_CASE("oversized sentence gets its own chunk") {
  const std::vector<std::string> sentences = {
      sentence_of_tokens(20), sentence_of_tokens(500), sentence_of_tokens(20)};
  const auto chunks = segment_coarse(sentences, 400);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[1].sentence_begin == 1);
  CHECK(chunks[1].sentence_end == 2);
  CHECK(chunks[1].token_count == 500);
}

TEST_CASE("chunks cover all sentences in order") {
  std::vector<std::string> sentences;
  for (int i = 0; i < 9; ++i) sentences.push_back(sentence_of_tokens(7 + i));
  const auto chunks = segment_coarse(sentences, 30);
  REQUIRE(!chunks.empty());
  CHECK(chunks.front().sentence_begin == 0);
  CHECK(chunks.back().sentence_end == sentences.size());
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    CHECK(chunks[i].sentence_begin == chunks[i - 1].sentence_end);
  }
}

TEST_CASE("budget below 16 tokens is rejected") {
  CHECK_THROWS_AS(segment_coarse({"a b c"}, 15), ContractViolation);
}

}  // TEST_SUITE

TEST_SUITE("two-stage segmentation") {

TEST_CASE("threshold 0 keeps coarse chunks, threshold 1 splits fully") {
  const std::string doc =
      "Aa bb cc. Dd ee ff. Gg hh ii.\n"
      "\n"
      "Jj kk. Ll mm. Nn oo.\n";
  const auto model = make_segmentation_model(32, FeatureMode::full, 11);

  const auto whole =
      segment_corpus(doc, "d", model, small_embedder(), 0.0, 400);
  REQUIRE(whole.size() == 2);  // one coarse chunk per paragraph
  CHECK(whole[0].text == "Aa bb cc. Dd ee ff. Gg hh ii.");
  CHECK(whole[1].text == "Jj kk. Ll mm. Nn oo.");

  const auto split =
      segment_corpus(doc, "d", model, small_embedder(), 1.0, 400);
  REQUIRE(split.size() == 6);  // every sentence on its own
  CHECK(split[0].text == "Aa bb cc.");
  CHECK(split[5].text == "Nn oo.");
}

TEST_CASE("chunk ids, spans and token counts are consistent") {
  const std::string doc = "Aa bb. Cc dd. Ee ff.\nGg hh. Ii jj.\n";
  const auto model = make_segmentation_model(32, FeatureMode::full, 13);
  const auto chunks =
      segment_corpus(doc, "mydoc", model, small_embedder(), 0.5, 400, 100);
  REQUIRE(!chunks.empty());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    CHECK(c.id == 100 + static_cast<std::int64_t>(i));
    CHECK(c.doc_id == "mydoc");
    CHECK(c.token_count == count_tokens(c.text));
    CHECK(c.sentence_begin < c.sentence_end);
  }
  // Paragraph indices move forward, never backward.
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    CHECK(chunks[i].paragraph >= chunks[i - 1].paragraph);
  }
}

TEST_CASE("chunk count is monotone in the threshold") {
  const auto model = make_segmentation_model(32, FeatureMode::full, 19);
  const std::string doc = sage_test::random_document(77);
  std::size_t previous = 0;
  for (double ss : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto chunks =
        segment_corpus(doc, "d", model, small_embedder(), ss, 60);
    CHECK(chunks.size() >= previous);
    previous = chunks.size();
  }
}

TEST_CASE("out-of-range threshold is rejected") {
  const auto model = make_segmentation_model(32, FeatureMode::full, 1);
  CHECK_THROWS_AS(
      segment_corpus("Aa.", "d", model, small_embedder(), 1.5, 400),
      ContractViolation);
  CHECK_THROWS_AS(
      segment_corpus("Aa.", "d", model, small_embedder(), -0.1, 400),
      ContractViolation);
}

TEST_CASE("empty document yields no chunks") {
  const auto model = make_segmentation_model(32, FeatureMode::full, 1);
  CHECK(segment_corpus("", "d", model, small_embedder(), 0.5, 400).empty());
  CHECK(segment_corpus("\n\n  \n", "d", model, small_embedder(), 0.5, 400)
            .empty());
}

}  // TEST_SUITE
