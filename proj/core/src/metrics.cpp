#include "sage/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "sage/error.hpp"
#include "sage/tokenizer.hpp"

namespace sage {

namespace {

bool is_punct_token(const std::string& tok) {
  return tok.size() == 1 && std::ispunct(static_cast<unsigned char>(tok[0]));
}

// Lowercased word tokens with punctuation discarded: the unit of comparison
// for every text metric here.
std::vector<std::string> canonical_tokens(const std::string& text) {
  std::string lower;
  lower.reserve(text.size());
  for (unsigned char c : text) {
    lower.push_back(static_cast<char>(std::tolower(c)));
  }
  std::vector<std::string> tokens = tokenize_text(lower);
  tokens.erase(std::remove_if(tokens.begin(), tokens.end(), is_punct_token),
               tokens.end());
  return tokens;
}

std::map<std::string, int> token_counts(const std::vector<std::string>& toks) {
  std::map<std::string, int> counts;
  for (const auto& t : toks) ++counts[t];
  return counts;
}

double pair_f1(const std::vector<std::string>& pred,
               const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  const auto pc = token_counts(pred);
  const auto gc = token_counts(gold);
  int overlap = 0;
  for (const auto& [tok, count] : pc) {
    auto it = gc.find(tok);
    if (it != gc.end()) overlap += std::min(count, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / pred.size();
  const double recall = static_cast<double>(overlap) / gold.size();
  return 2.0 * precision * recall / (precision + recall);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  // Two-row dynamic program; a is the shorter side to bound memory.
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& l = a.size() <= b.size() ? b : a;
  std::vector<std::size_t> prev(s.size() + 1, 0), cur(s.size() + 1, 0);
  for (std::size_t i = 1; i <= l.size(); ++i) {
    for (std::size_t j = 1; j <= s.size(); ++j) {
      cur[j] = l[i - 1] == s[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[s.size()];
}

}  // namespace

double cost(std::int64_t input_tokens, std::int64_t output_tokens,
            double price_in, double price_out) {
  if (input_tokens < 0 || output_tokens < 0) {
    throw ContractViolation("token counts must be non-negative");
  }
  if (!(price_in >= 0.0) || !(price_out >= 0.0) ||
      !std::isfinite(price_in) || !std::isfinite(price_out)) {
    throw ContractViolation("prices must be non-negative and finite");
  }
  return static_cast<double>(input_tokens) * price_in +
         static_cast<double>(output_tokens) * price_out;
}

CostReport make_cost_report(std::int64_t input_tokens,
                            std::int64_t output_tokens, double price_in,
                            double price_out, double quality) {
  CostReport report;
  report.input_tokens = input_tokens;
  report.output_tokens = output_tokens;
  report.price_in = price_in;
  report.price_out = price_out;
  report.quality = quality;
  report.cost = cost(input_tokens, output_tokens, price_in, price_out);
  if (report.cost > 0.0) {
    report.efficiency = cost_efficiency(quality, report.cost);
  }
  return report;
}

double cost_efficiency(double quality, double total_cost) {
  if (!std::isfinite(quality) || quality < 0.0) {
    throw ContractViolation("quality must be finite and non-negative");
  }
  if (!std::isfinite(total_cost) || total_cost < 0.0) {
    throw ContractViolation("cost must be finite and non-negative");
  }
  if (total_cost == 0.0) {
    throw UndefinedEfficiencyError("cost-efficiency undefined at zero cost");
  }
  return quality / total_cost;
}

double relative_cost_efficiency(double quality_m, double tokens_m,
                                double quality_b, double tokens_b) {
  if (tokens_m < 0.0 || tokens_b < 0.0 || !std::isfinite(tokens_m) ||
      !std::isfinite(tokens_b)) {
    throw ContractViolation("token totals must be finite and non-negative");
  }
  if (tokens_m == 0.0 || tokens_b == 0.0) {
    throw UndefinedEfficiencyError(
        "cost efficiency is undefined at zero cost");
  }
  if (!(quality_b > 0.0)) {
    throw ContractViolation("baseline quality must be positive");
  }
  if (!std::isfinite(quality_m) || quality_m < 0.0) {
    throw ContractViolation("method quality must be finite and non-negative");
  }
  return (quality_m / tokens_m) / (quality_b / tokens_b);
}

std::string canonical_answer(const std::string& text) {
  // A parenthesized single letter or digit names an option label, so replies
  // like "Option (a)" or "(B)." reduce to just that label.
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    if (text[i] == '(' && text[i + 2] == ')' &&
        std::isalnum(static_cast<unsigned char>(text[i + 1]))) {
      const auto c = static_cast<unsigned char>(text[i + 1]);
      return std::string(1, static_cast<char>(std::tolower(c)));
    }
  }
  std::string out;
  for (const auto& tok : canonical_tokens(text)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& golds) {
  if (predictions.empty() || predictions.size() != golds.size()) {
    throw ContractViolation("accuracy needs matching nonzero prediction/gold lists");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (canonical_answer(predictions[i]) == canonical_answer(golds[i])) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / predictions.size();
}

double f1_match(const std::string& prediction,
                const std::vector<std::string>& golds) {
  if (golds.empty()) {
    throw ContractViolation("f1_match needs at least one gold answer");
  }
  const auto pred = canonical_tokens(prediction);
  double best = 0.0;
  for (const auto& gold : golds) {
    best = std::max(best, pair_f1(pred, canonical_tokens(gold)));
  }
  return best;
}

double rouge_l(const std::string& prediction, const std::string& reference) {
  const auto pred = canonical_tokens(prediction);
  const auto ref = canonical_tokens(reference);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  const std::size_t lcs = lcs_length(pred, ref);
  if (lcs == 0) return 0.0;
  const double precision = static_cast<double>(lcs) / pred.size();
  const double recall = static_cast<double>(lcs) / ref.size();
  return 2.0 * precision * recall / (precision + recall);
}

double bleu_n(const std::string& prediction, const std::string& reference,
              int max_order) {
  if (max_order < 1 || max_order > 4) {
    throw ContractViolation("bleu order must be in 1..4");
  }
  const auto pred = canonical_tokens(prediction);
  const auto ref = canonical_tokens(reference);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;

  double log_precision_sum = 0.0;
  for (int order = 1; order <= max_order; ++order) {
    const std::size_t k = static_cast<std::size_t>(order);
    if (pred.size() < k) return 0.0;

    auto grams = [&](const std::vector<std::string>& toks) {
      std::map<std::string, int> counts;
      if (toks.size() < k) return counts;
      for (std::size_t i = 0; i + k <= toks.size(); ++i) {
        std::string gram;
        for (std::size_t j = 0; j < k; ++j) {
          if (j) gram += '\x1f';
          gram += toks[i + j];
        }
        ++counts[gram];
      }
      return counts;
    };

    const auto pg = grams(pred);
    const auto rg = grams(ref);
    long clipped = 0, total = 0;
    for (const auto& [gram, count] : pg) {
      total += count;
      auto it = rg.find(gram);
      if (it != rg.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_precision_sum +=
        std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }

  const double c = static_cast<double>(pred.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_precision_sum / max_order);
}

}  // namespace sage
