#pragma once

// Shared generators for the unit and acceptance suites: synthetic two-topic
// sentence corpora, a small corpus with one planted fact, and scratch
// directories that clean up after themselves.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sage/random.hpp"
#include "sage/segmenter.hpp"

namespace sage_test {

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / ("sage-test-" + std::to_string(counter()++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static std::uint64_t& counter() {
    static std::uint64_t n =
        std::random_device{}() * 65536ull;  // avoid collisions across runs
    return n;
  }
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("could not write " + path);
}

// ---------------------------------------------------------------------------
// Two-topic language. Every word of a topic carries the topic's stem, so the
// trigram-hash embedder maps same-topic sentences into the same region and a
// pair scorer has something learnable to find.

inline const std::vector<std::string>& topic_suffixes() {
  static const std::vector<std::string> suffixes = {
      "an",  "el",  "ov",   "ith", "ara", "une", "iko", "esh", "ul",  "ost",
      "ine", "ak",  "orr",  "ede", "im",  "ua",  "yl",  "ont", "ef",  "is",
      "ter", "on",  "ale",  "ik",  "ur",  "ed",  "ia",  "oth", "ast", "em"};
  return suffixes;
}

inline std::string topic_word(int topic, std::size_t index) {
  static const char* stems[2] = {"zor", "mek"};
  const auto& suffixes = topic_suffixes();
  return stems[topic] + suffixes[index % suffixes.size()];
}

/// One sentence of `words` words drawn from the given topic's vocabulary.
inline std::string topic_sentence(int topic, std::size_t words,
                                  std::mt19937_64& rng) {
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (!out.empty()) out += ' ';
    out += topic_word(topic, sage::bounded_rand(rng, topic_suffixes().size()));
  }
  out += '.';
  return out;
}

/// Labeled pairs: positives are two sentences of one topic, negatives one
/// sentence of each. Deterministic in the seed; order interleaved so any
/// train/held-out split stays balanced.
inline std::vector<sage::SentencePair> two_topic_pairs(std::size_t positives,
                                                       std::size_t negatives,
                                                       std::size_t words,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<sage::SentencePair> pairs;
  pairs.reserve(positives + negatives);
  const std::size_t total = positives + negatives;
  std::size_t made_pos = 0, made_neg = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const bool want_pos =
        made_pos < positives &&
        (made_neg >= negatives || made_pos * negatives <= made_neg * positives);
    if (want_pos) {
      const int topic = static_cast<int>(sage::bounded_rand(rng, 2));
      pairs.push_back({topic_sentence(topic, words, rng),
                       topic_sentence(topic, words, rng), 1.0});
      ++made_pos;
    } else {
      pairs.push_back(
          {topic_sentence(0, words, rng), topic_sentence(1, words, rng), 0.0});
      ++made_neg;
    }
  }
  return pairs;
}

/// Fraction of pairs whose score lands on the right side of 0.5.
inline double pair_accuracy(const sage::SegmentationModel& model,
                            const std::vector<sage::SentencePair>& pairs,
                            const sage::EmbedderSpec& embedder) {
  std::vector<std::pair<std::string, std::string>> inputs;
  inputs.reserve(pairs.size());
  for (const auto& p : pairs) inputs.emplace_back(p.first, p.second);
  const std::vector<double> scores =
      sage::score_pairs(model, inputs, embedder);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool same = scores[i] >= 0.5;
    if (same == (pairs[i].label >= 0.5)) ++correct;
  }
  return pairs.empty() ? 0.0
                       : static_cast<double>(correct) / pairs.size();
}

// ---------------------------------------------------------------------------
// A ten-document corpus with one planted fact. The planted sentence sits in
// a paragraph of its own, so segmentation always yields it as a standalone
// chunk; its wording shares no vocabulary with the filler documents.

struct PlantedCorpus {
  std::string question;
  std::string gold_answer;  // exactly the planted chunk's text
  std::string planted_doc;  // file name the fact lives in
};

inline PlantedCorpus write_planted_corpus(const std::string& dir) {
  std::mt19937_64 rng(4242);
  for (int d = 0; d < 10; ++d) {
    std::string body;
    const int topic = d % 2;
    for (int p = 0; p < 3; ++p) {
      std::string para;
      for (int s = 0; s < 4; ++s) {
        if (!para.empty()) para += ' ';
        para += topic_sentence(topic, 7, rng);
      }
      body += para + "\n";
    }
    if (d == 6) {
      body += "\nThe emerald key opens the northern gate.\n";
    }
    write_file(dir + "/doc" + std::to_string(d) + ".txt", body);
  }
  return {"What opens the northern gate?",
          "The emerald key opens the northern gate.", "doc6.txt"};
}

/// A multi-paragraph document in the mixed two-topic language, with shape
/// (paragraph and sentence counts, sentence lengths) varying by seed.
inline std::string random_document(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t paragraphs = 2 + sage::bounded_rand(rng, 3);
  std::string body;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    const std::size_t sentences = 3 + sage::bounded_rand(rng, 5);
    std::string para;
    for (std::size_t s = 0; s < sentences; ++s) {
      const int topic = static_cast<int>(sage::bounded_rand(rng, 2));
      const std::size_t words = 4 + sage::bounded_rand(rng, 8);
      if (!para.empty()) para += ' ';
      para += topic_sentence(topic, words, rng);
    }
    body += para + "\n";
  }
  return body;
}

}  // namespace sage_test
