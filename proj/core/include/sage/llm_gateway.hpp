#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sage/http_transport.hpp"

namespace sage {

struct LlmRequest {
  std::string model;
  std::string prompt;
  std::size_t max_output_tokens = 512;
};

struct LlmResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
};

enum class LlmKind {
  /// OpenAI-style POST /v1/chat/completions.
  remote,
  /// Replays canned responses from a script file, strictly in order.
  scripted_mock,
  /// Deterministic offline stand-in: answers with the first context chunk of
  /// the prompt, reviews with a fixed top score. See EchoTopChunkClient.
  echo_top_chunk,
};

struct LlmSpec {
  LlmKind kind = LlmKind::echo_top_chunk;
  std::string model = "offline";
  std::string endpoint;
  std::size_t max_output_tokens = 512;
  /// scripted_mock only.
  std::string script_path;
  /// remote only: bounded retry policy and concurrency cap.
  std::size_t max_attempts = 3;
  std::size_t backoff_ms = 200;
  std::size_t max_in_flight = 4;
};

/// One canned turn of a scripted mock. Token counts fall back to tokenizing
/// the prompt/response when the script omits them.
struct ScriptEntry {
  std::string response_text;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
};

/// Reads a script: one JSON object per line, {"response_text": ...,
/// "input_tokens"?: ..., "output_tokens"?: ...}.
std::vector<ScriptEntry> load_mock_script(const std::string& path);

class ScriptedMockClient : public LlmClient {
 public:
  explicit ScriptedMockClient(std::vector<ScriptEntry> script);
  /// Returns the next unconsumed entry; ScriptExhaustedError past the end.
  LlmResponse complete(const LlmRequest& request) override;
  std::size_t consumed() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptEntry> script_;
  std::size_t next_ = 0;
};

/// Fully deterministic function of the prompt, usable from any number of
/// threads. Review prompts get "SCORE: 10 / ADJUST: -1" (always satisfied,
/// never loops); anything else gets the text of the prompt's first numbered
/// context chunk. Lets end-to-end tests check that retrieval put the right
/// chunk first without any model in the loop.
class EchoTopChunkClient : public LlmClient {
 public:
  LlmResponse complete(const LlmRequest& request) override;
};

class RemoteChatClient : public LlmClient {
 public:
  explicit RemoteChatClient(LlmSpec spec);
  /// Test hook: replace the wire call, keep retry/parse behavior.
  RemoteChatClient(LlmSpec spec, HttpPostFn post);

  /// Sends the chat request, honoring the spec's in-flight cap. Retries
  /// transport failures and 5xx up to max_attempts with linear backoff;
  /// other HTTP errors fail fast as non-retryable TransportError.
  LlmResponse complete(const LlmRequest& request) override;

 private:
  LlmSpec spec_;
  HttpPostFn post_;
  std::shared_ptr<void> gate_;
};

std::unique_ptr<LlmClient> make_llm_client(const LlmSpec& spec);

// ---------------------------------------------------------------------------
// Prompts

enum class QuestionType { multiple_choice, open_ended };

/// Assemble the answer prompt: numbered context chunks in the given order,
/// the question, options labeled (A), (B), ... for multiple choice, and a
/// one-line reply instruction.
std::string build_answer_prompt(const std::string& question,
                                const std::vector<std::string>& chunks,
                                QuestionType type,
                                const std::vector<std::string>& options = {});

/// Ask the model to grade an answer attempt and vote on context size. The
/// reply contract is two lines, "SCORE: <1-10>" and "ADJUST: <-1 or 1>".
/// strict=true is the re-ask wording used after an unparseable reply.
std::string build_feedback_prompt(const std::string& question,
                                  const std::vector<std::string>& chunks,
                                  const std::string& answer,
                                  bool strict = false);

struct FeedbackVerdict {
  int quality_score = 0;  // 1..10
  int adjustment = 0;     // -1 shrink, +1 grow
};

/// Extract the verdict from a reply: the first "SCORE:" followed by an
/// integer in 1..10 and the first "ADJUST:" followed by -1 or 1, wherever
/// they appear. Anything else throws ParseError carrying the raw text.
FeedbackVerdict parse_feedback(const std::string& text);

/// Canonical two-line rendering, accepted by parse_feedback. Handy for
/// building mock scripts.
std::string format_feedback(const FeedbackVerdict& verdict);

}  // namespace sage
