#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sage {

/// Dollar cost of a call: input_tokens * price_in + output_tokens *
/// price_out. Prices are per token (so $10 per million tokens is 10 / 1e6).
/// Token counts must be non-negative, prices non-negative and finite.
double cost(std::int64_t input_tokens, std::int64_t output_tokens,
            double price_in, double price_out);

/// Token usage, pricing and derived cost for a run, plus the quality score
/// the cost bought.
struct CostReport {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double price_in = 0.0;
  double price_out = 0.0;
  double cost = 0.0;
  double quality = 0.0;
  /// quality / cost; unset when the cost is zero.
  std::optional<double> efficiency;
};

CostReport make_cost_report(std::int64_t input_tokens,
                            std::int64_t output_tokens, double price_in,
                            double price_out, double quality);

/// Quality per dollar. Throws UndefinedEfficiencyError when cost is zero.
double cost_efficiency(double quality, double cost);

/// Efficiency of a method relative to a baseline when both paid the same
/// per-token prices: (quality_m / tokens_m) / (quality_b / tokens_b).
/// The baseline must have positive quality and tokens; the method must have
/// positive tokens.
double relative_cost_efficiency(double quality_m, double tokens_m,
                                double quality_b, double tokens_b);

/// Canonical form used for exact-match comparison: trimmed, lowercased,
/// surrounding punctuation stripped; a reply like "(B)" or "B." reduces to
/// "b". Multi-word text keeps single spaces between words.
std::string canonical_answer(const std::string& text);

/// Fraction of predictions whose canonical form equals the canonical gold.
/// Sizes must match; empty inputs are a ContractViolation.
double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& golds);

/// Token-level F1 against the best-matching gold (SQuAD style): harmonic
/// mean of precision and recall over bag-of-token overlap of canonical
/// forms. Returns 1.0 when both sides are empty after canonicalization.
double f1_match(const std::string& prediction,
                const std::vector<std::string>& golds);

/// ROUGE-L F-measure: longest common subsequence of canonical tokens.
double rouge_l(const std::string& prediction, const std::string& reference);

/// BLEU-n with uniform weights over 1..n-gram modified precisions and the
/// standard brevity penalty. n must be in 1..4. Zero precision at any order
/// gives 0 (no smoothing).
double bleu_n(const std::string& prediction, const std::string& reference,
              int max_order);

}  // namespace sage
