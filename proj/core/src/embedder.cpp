#include "sage/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/hashing.hpp"
#include "sage/http_transport.hpp"
#include "in_flight_gate.hpp"

namespace sage {

namespace {

using json = nlohmann::json;

// Texts are lowercased and whitespace-collapsed before hashing so that
// formatting differences do not move vectors around.
std::string normalize_for_hashing(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Boundary sentinels so even a single character yields a trigram and word
// edges carry signal.
constexpr char kHead = '\x01';
constexpr char kTail = '\x02';

Vector hash_embed(const std::string& text, std::size_t dim, bool* no_features) {
  Vector v(dim, 0.0);
  const std::string norm = normalize_for_hashing(text);
  if (norm.empty()) {
    if (no_features) *no_features = true;
    return v;
  }

  std::string padded;
  padded.reserve(norm.size() + 2);
  padded.push_back(kHead);
  padded += norm;
  padded.push_back(kTail);

  std::uint64_t first_hash = 0;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
    if (i == 0) first_hash = h;
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    // Signed hashing: the sign bit decides the direction, which keeps the
    // expected dot product of unrelated texts near zero.
    v[bucket] += (h >> 63) ? 1.0 : -1.0;
  }

  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq == 0.0) {
    // Total sign cancellation. Practically unreachable, but the contract is
    // "non-empty text embeds to unit length", so pick a deterministic axis.
    v[static_cast<std::size_t>(first_hash % dim)] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

bool is_blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

HttpHeaders auth_headers() {
  HttpHeaders headers;
  if (const char* key = std::getenv("SAGE_EMBED_API_KEY")) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  return headers;
}

// One wire call for a sub-batch. `base` is the index of texts[0] within the
// caller's full batch, used only for error messages.
std::vector<Vector> remote_embed_batch(const std::vector<std::string>& texts,
                                       const EmbedderSpec& spec,
                                       std::size_t base) {
  json payload = {{"model", spec.model}, {"input", texts}};

  HttpResponse resp;
  {
    auto gate = gate_for_endpoint(spec.endpoint, spec.max_in_flight);
    InFlightPass pass(*gate);
    resp = http_post_json(spec.endpoint, payload.dump(), auth_headers());
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw TransportError("embedding service returned HTTP " +
                             std::to_string(resp.status) + " for batch [" +
                             std::to_string(base) + ", " +
                             std::to_string(base + texts.size()) + ")",
                         spec.endpoint, resp.status >= 500);
  }

  json body;
  try {
    body = json::parse(resp.body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("embedding response is not JSON: ") + e.what(),
                     resp.body);
  }
  if (!body.contains("data") || !body["data"].is_array()) {
    throw ParseError("embedding response has no data array", resp.body);
  }

  std::vector<Vector> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  for (const auto& item : body["data"]) {
    if (!item.contains("index") || !item.contains("embedding")) {
      throw ParseError("embedding element missing index/embedding",
                       resp.body);
    }
    const std::size_t idx = item["index"].get<std::size_t>();
    if (idx >= texts.size()) {
      throw ParseError("embedding element index " + std::to_string(idx) +
                           " out of range",
                       resp.body);
    }
    Vector v = item["embedding"].get<Vector>();
    if (v.size() != spec.dimension) {
      throw ParseError("element " + std::to_string(base + idx) +
                           ": embedding has dimension " +
                           std::to_string(v.size()) + ", expected " +
                           std::to_string(spec.dimension),
                       resp.body);
    }
    out[idx] = std::move(v);
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw ParseError("element " + std::to_string(base + i) +
                           ": no embedding in response",
                       resp.body);
    }
  }

  // Services do not all normalize; the unit-length invariant is ours.
  for (Vector& v : out) {
    const double n = l2_norm(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
  }
  return out;
}

constexpr std::size_t kRemoteBatchLimit = 512;

}  // namespace

double l2_norm(const Vector& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

bool is_zero_vector(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ContractViolation("cosine_similarity dimension mismatch: " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  // The zero vector has no direction; by convention it is similar to
  // nothing rather than an error (blank texts embed to zero).
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(sim, -1.0, 1.0);
}

bool operator==(const EmbedderSpec& a, const EmbedderSpec& b) {
  return a.kind == b.kind && a.dimension == b.dimension &&
         a.endpoint == b.endpoint && a.model == b.model;
}

Vector embed_text(const std::string& text, const EmbedderSpec& spec,
                  bool* no_features) {
  if (spec.dimension < 8) {
    throw ContractViolation("embedder dimension must be >= 8");
  }
  if (no_features) *no_features = false;

  if (spec.kind == EmbedderKind::reference_hash) {
    return hash_embed(text, spec.dimension, no_features);
  }

  // Blank input never goes over the wire; same zero-vector semantics as the
  // local embedder.
  if (is_blank(text)) {
    if (no_features) *no_features = true;
    return Vector(spec.dimension, 0.0);
  }
  return remote_embed_batch({text}, spec, 0).front();
}

std::vector<Vector> embed_batch(const std::vector<std::string>& texts,
                                const EmbedderSpec& spec) {
  if (spec.dimension < 8) {
    throw ContractViolation("embedder dimension must be >= 8");
  }
  std::vector<Vector> out;
  out.reserve(texts.size());

  if (spec.kind == EmbedderKind::reference_hash) {
    for (const auto& t : texts) out.push_back(hash_embed(t, spec.dimension, nullptr));
    return out;
  }

  out.assign(texts.size(), Vector(spec.dimension, 0.0));
  std::vector<std::string> pending;
  std::vector<std::size_t> pending_pos;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!is_blank(texts[i])) {
      pending.push_back(texts[i]);
      pending_pos.push_back(i);
    }
  }

  for (std::size_t start = 0; start < pending.size();
       start += kRemoteBatchLimit) {
    const std::size_t stop = std::min(start + kRemoteBatchLimit, pending.size());
    std::vector<std::string> sub(pending.begin() + start, pending.begin() + stop);
    std::vector<Vector> vecs = remote_embed_batch(sub, spec, start);
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      out[pending_pos[start + j]] = std::move(vecs[j]);
    }
  }
  return out;
}

std::shared_ptr<InFlightGate> gate_for_endpoint(const std::string& endpoint,
                                                std::size_t limit) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<InFlightGate>> gates;
  std::lock_guard lock(mu);
  auto it = gates.find(endpoint);
  if (it == gates.end()) {
    it = gates.emplace(endpoint, std::make_shared<InFlightGate>(limit)).first;
  }
  return it->second;
}

}  // namespace sage
