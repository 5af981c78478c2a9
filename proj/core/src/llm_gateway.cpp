#include "sage/llm_gateway.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/tokenizer.hpp"
#include "in_flight_gate.hpp"

namespace sage {

namespace {

using json = nlohmann::json;

// Markers the echo client keys on; keep in sync with the prompt builders.
constexpr const char* kReviewMarker = "Rate the answer quality";
constexpr const char* kFirstChunkMarker = "\n[1] ";

std::int64_t tokens_of(const std::string& text) {
  return static_cast<std::int64_t>(count_tokens(text));
}

std::string option_label(std::size_t i) {
  std::string label = "(";
  label += static_cast<char>('A' + i);
  label += ")";
  return label;
}

void require_prompt(const LlmRequest& request) {
  if (request.prompt.empty()) {
    throw ContractViolation("completion request needs a nonempty prompt");
  }
}

}  // namespace

std::vector<ScriptEntry> load_mock_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mock script: " + path);
  std::vector<ScriptEntry> script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("mock script line " + std::to_string(line_no) +
                           " is not JSON: " + e.what(),
                       line);
    }
    ScriptEntry entry;
    if (!row.contains("response_text") || !row["response_text"].is_string()) {
      throw ParseError("mock script line " + std::to_string(line_no) +
                           " has no response_text string",
                       line);
    }
    entry.response_text = row["response_text"].get<std::string>();
    if (row.contains("input_tokens")) {
      entry.input_tokens = row["input_tokens"].get<std::int64_t>();
    }
    if (row.contains("output_tokens")) {
      entry.output_tokens = row["output_tokens"].get<std::int64_t>();
    }
    script.push_back(std::move(entry));
  }
  return script;
}

ScriptedMockClient::ScriptedMockClient(std::vector<ScriptEntry> script)
    : script_(std::move(script)) {}

std::size_t ScriptedMockClient::consumed() const {
  std::lock_guard lock(mu_);
  return next_;
}

LlmResponse ScriptedMockClient::complete(const LlmRequest& request) {
  require_prompt(request);
  std::lock_guard lock(mu_);
  if (next_ >= script_.size()) {
    throw ScriptExhaustedError("mock script exhausted after " +
                               std::to_string(script_.size()) + " turns");
  }
  const ScriptEntry& entry = script_[next_++];
  LlmResponse resp;
  resp.text = entry.response_text;
  resp.input_tokens =
      entry.input_tokens ? *entry.input_tokens : tokens_of(request.prompt);
  resp.output_tokens =
      entry.output_tokens ? *entry.output_tokens : tokens_of(entry.response_text);
  return resp;
}

LlmResponse EchoTopChunkClient::complete(const LlmRequest& request) {
  require_prompt(request);
  LlmResponse resp;
  resp.input_tokens = tokens_of(request.prompt);
  if (request.prompt.find(kReviewMarker) != std::string::npos) {
    resp.text = "SCORE: 10\nADJUST: -1";
  } else {
    const std::size_t pos = request.prompt.find(kFirstChunkMarker);
    if (pos == std::string::npos) {
      resp.text = "no context available";
    } else {
      const std::size_t start = pos + std::char_traits<char>::length(kFirstChunkMarker);
      std::size_t end = request.prompt.find('\n', start);
      if (end == std::string::npos) end = request.prompt.size();
      resp.text = request.prompt.substr(start, end - start);
    }
  }
  resp.output_tokens = tokens_of(resp.text);
  return resp;
}

RemoteChatClient::RemoteChatClient(LlmSpec spec)
    : RemoteChatClient(std::move(spec), nullptr) {}

RemoteChatClient::RemoteChatClient(LlmSpec spec, HttpPostFn post)
    : spec_(std::move(spec)), post_(std::move(post)) {
  if (!post_) {
    post_ = [](const std::string& url, const std::string& body,
               const HttpHeaders& headers) {
      return http_post_json(url, body, headers);
    };
  }
  gate_ = gate_for_endpoint(spec_.endpoint, spec_.max_in_flight);
}

LlmResponse RemoteChatClient::complete(const LlmRequest& request) {
  require_prompt(request);
  const json payload = {
      {"model", request.model.empty() ? spec_.model : request.model},
      {"messages",
       json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"max_tokens", request.max_output_tokens},
  };

  HttpHeaders headers;
  if (const char* key = std::getenv("SAGE_LLM_API_KEY")) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }

  const std::size_t attempts = spec_.max_attempts == 0 ? 1 : spec_.max_attempts;
  HttpResponse resp;
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      InFlightPass pass(*static_cast<InFlightGate*>(gate_.get()));
      resp = post_(spec_.endpoint, payload.dump(), headers);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(spec_.backoff_ms * attempt));
      continue;
    }
    if (resp.status >= 200 && resp.status < 300) break;
    if (resp.status >= 500 && attempt < attempts) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(spec_.backoff_ms * attempt));
      continue;
    }
    throw TransportError("chat service returned HTTP " +
                             std::to_string(resp.status) + " after " +
                             std::to_string(attempt) + " attempt(s)",
                         spec_.endpoint, resp.status >= 500);
  }

  json body;
  try {
    body = json::parse(resp.body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("chat response is not JSON: ") + e.what(),
                     resp.body);
  }
  LlmResponse out;
  try {
    out.text = body.at("choices").at(0).at("message").at("content")
                   .get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError("chat response has no choices[0].message.content: " +
                         std::string(e.what()),
                     resp.body);
  }
  if (body.contains("usage")) {
    out.input_tokens = body["usage"].value("prompt_tokens", std::int64_t{0});
    out.output_tokens =
        body["usage"].value("completion_tokens", std::int64_t{0});
  }
  if (out.input_tokens == 0) out.input_tokens = tokens_of(request.prompt);
  if (out.output_tokens == 0) out.output_tokens = tokens_of(out.text);
  return out;
}

std::unique_ptr<LlmClient> make_llm_client(const LlmSpec& spec) {
  switch (spec.kind) {
    case LlmKind::remote:
      return std::make_unique<RemoteChatClient>(spec);
    case LlmKind::scripted_mock:
      return std::make_unique<ScriptedMockClient>(
          load_mock_script(spec.script_path));
    case LlmKind::echo_top_chunk:
      return std::make_unique<EchoTopChunkClient>();
  }
  throw ConfigError("unknown llm client kind");
}

std::string build_answer_prompt(const std::string& question,
                                const std::vector<std::string>& chunks,
                                QuestionType type,
                                const std::vector<std::string>& options) {
  if (chunks.empty()) {
    throw ContractViolation("answer prompt needs at least one context chunk");
  }
  if (type == QuestionType::multiple_choice && options.empty()) {
    throw ContractViolation("multiple choice question has no options");
  }
  std::string prompt =
      "Answer the question using only the numbered context below.\n\nContext:";
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    prompt += "\n[" + std::to_string(i + 1) + "] " + chunks[i];
  }
  prompt += "\n\nQuestion: " + question + "\n";
  if (type == QuestionType::multiple_choice) {
    prompt += "\nOptions:\n";
    for (std::size_t i = 0; i < options.size(); ++i) {
      prompt += option_label(i) + " " + options[i] + "\n";
    }
    prompt += "\nReply with exactly one option label.";
  } else {
    prompt += "\nReply with a short answer drawn from the context.";
  }
  return prompt;
}

std::string build_feedback_prompt(const std::string& question,
                                  const std::vector<std::string>& chunks,
                                  const std::string& answer, bool strict) {
  if (answer.empty()) {
    throw ContractViolation("feedback prompt needs a nonempty answer");
  }
  std::string prompt = "Review this question answering attempt.\n\nContext:";
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    prompt += "\n[" + std::to_string(i + 1) + "] " + chunks[i];
  }
  prompt += "\n\nQuestion: " + question + "\n";
  prompt += "Answer: " + answer + "\n\n";
  prompt += kReviewMarker;
  prompt +=
      " from 1 to 10. Then decide whether the context contained redundant "
      "chunks (reply -1) or was missing needed information (reply 1).\n";
  if (strict) {
    prompt +=
        "Your previous reply could not be parsed. Respond with exactly two "
        "lines and nothing else:\n";
  } else {
    prompt += "Respond with two lines:\n";
  }
  prompt += "SCORE: <integer 1-10>\nADJUST: <-1 or 1>";
  return prompt;
}

namespace {

// First occurrence of `key` that is followed by a parseable integer.
// Returns true and the value via *out.
bool find_labeled_int(const std::string& text, const std::string& key,
                      long* out) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    std::size_t q = p;
    if (q < text.size() && (text[q] == '-' || text[q] == '+')) ++q;
    std::size_t digits_begin = q;
    while (q < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[q]))) {
      ++q;
    }
    if (q > digits_begin) {
      *out = std::strtol(text.substr(p, q - p).c_str(), nullptr, 10);
      return true;
    }
    pos += key.size();
  }
  return false;
}

}  // namespace

FeedbackVerdict parse_feedback(const std::string& text) {
  long score = 0;
  if (!find_labeled_int(text, "SCORE:", &score)) {
    throw ParseError("review reply has no SCORE line", text);
  }
  if (score < 1 || score > 10) {
    throw ParseError("review score " + std::to_string(score) +
                         " outside 1..10",
                     text);
  }
  long adjust = 0;
  if (!find_labeled_int(text, "ADJUST:", &adjust)) {
    throw ParseError("review reply has no ADJUST line", text);
  }
  if (adjust != -1 && adjust != 1) {
    throw ParseError("review adjustment must be -1 or 1, got " +
                         std::to_string(adjust),
                     text);
  }
  return {static_cast<int>(score), static_cast<int>(adjust)};
}

std::string format_feedback(const FeedbackVerdict& verdict) {
  return "SCORE: " + std::to_string(verdict.quality_score) +
         "\nADJUST: " + std::to_string(verdict.adjustment);
}

}  // namespace sage
