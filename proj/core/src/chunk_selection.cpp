#include "sage/chunk_selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/http_transport.hpp"
#include "in_flight_gate.hpp"

namespace sage {

namespace {

using json = nlohmann::json;

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

HttpHeaders rerank_auth_headers() {
  HttpHeaders headers;
  if (const char* key = std::getenv("SAGE_RERANK_API_KEY")) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  return headers;
}

std::vector<double> remote_rerank_scores(const std::string& question,
                                         const std::vector<Chunk>& candidates,
                                         const RerankerSpec& spec) {
  json passages = json::array();
  for (const auto& c : candidates) passages.push_back(c.text);
  const json payload = {{"query", question}, {"passages", passages}};

  HttpResponse resp;
  {
    auto gate = gate_for_endpoint(spec.endpoint, spec.max_in_flight);
    InFlightPass pass(*gate);
    resp = http_post_json(spec.endpoint, payload.dump(), rerank_auth_headers());
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw TransportError(
        "rerank service returned HTTP " + std::to_string(resp.status),
        spec.endpoint, resp.status >= 500);
  }

  json body;
  try {
    body = json::parse(resp.body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("rerank response is not JSON: ") + e.what(),
                     resp.body);
  }
  // Expected: {"scores": [s0, s1, ...]} aligned with the request passages.
  if (!body.contains("scores") || !body["scores"].is_array()) {
    throw ParseError("rerank response has no scores array", resp.body);
  }
  const auto& arr = body["scores"];
  if (arr.size() != candidates.size()) {
    throw ParseError("rerank returned " + std::to_string(arr.size()) +
                         " scores for " + std::to_string(candidates.size()) +
                         " passages",
                     resp.body);
  }
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ParseError("rerank score " + std::to_string(i) + " is not a number",
                       resp.body);
    }
    scores[i] = arr[i].get<double>();
  }
  return scores;
}

}  // namespace

const char* to_string(CutReason reason) {
  switch (reason) {
    case CutReason::gradient_stop:
      return "gradient-stop";
    case CutReason::exhausted_candidates:
      return "exhausted-candidates";
    case CutReason::min_k_floor:
      return "min_k-floor";
  }
  return "unknown";
}

std::vector<double> normalize_scores(const std::vector<double>& raw) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (double x : raw) {
    if (!std::isfinite(x)) {
      throw ContractViolation("scores must be finite to normalize");
    }
    out.push_back(logistic(x));
  }
  return out;
}

std::vector<ScoredChunk> rerank(const std::string& question,
                                const std::vector<Chunk>& candidates,
                                const RerankerSpec& reranker,
                                const EmbedderSpec& embedder) {
  if (candidates.empty()) return {};

  std::vector<double> raw(candidates.size(), 0.0);
  if (reranker.kind == RerankerKind::reference_cosine) {
    const Vector q = embed_text(question, embedder);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      raw[i] = cosine_similarity(q, embed_text(candidates[i].text, embedder));
    }
  } else {
    raw = remote_rerank_scores(question, candidates, reranker);
  }

  const std::vector<double> norm = normalize_scores(raw);
  std::vector<ScoredChunk> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back({candidates[i].id, raw[i], norm[i]});
  }
  std::sort(out.begin(), out.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.normalized_score != b.normalized_score) {
      return a.normalized_score > b.normalized_score;
    }
    return a.chunk_id < b.chunk_id;
  });
  return out;
}

SelectionResult select_gradient(const std::vector<ScoredChunk>& ranked,
                                std::size_t min_k, double g) {
  if (ranked.empty()) {
    throw ContractViolation("selection needs at least one candidate");
  }
  if (min_k == 0) throw ContractViolation("min_k must be >= 1");
  if (!(g > 0.0 && g <= 1.0)) {
    throw ContractViolation("gradient threshold must be in (0, 1]");
  }
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    if (ranked[i].normalized_score > ranked[i - 1].normalized_score) {
      throw ContractViolation(
          "candidates must be sorted by non-increasing normalized score");
    }
  }

  const std::size_t n = ranked.size();
  const std::size_t floor = std::min(min_k, n);

  // Everything up to the floor is kept unconditionally, but remember whether
  // a violation happened inside the floor: if the walk then stops right at
  // the floor, that earlier drop is the real cause.
  bool drop_inside_floor = false;
  for (std::size_t i = 1; i < floor; ++i) {
    if (ranked[i].normalized_score < g * ranked[i - 1].normalized_score) {
      drop_inside_floor = true;
      break;
    }
  }

  std::size_t k = floor;
  CutReason reason = CutReason::exhausted_candidates;
  while (k < n) {
    if (ranked[k].normalized_score >= g * ranked[k - 1].normalized_score) {
      ++k;
    } else {
      reason = (k == floor && drop_inside_floor) ? CutReason::min_k_floor
                                                 : CutReason::gradient_stop;
      break;
    }
  }

  SelectionResult result;
  result.selected.assign(ranked.begin(), ranked.begin() + k);
  result.k_selected = k;
  result.cut_reason = reason;
  return result;
}

}  // namespace sage
