#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sage/chunk_selection.hpp"
#include "sage/config.hpp"
#include "sage/llm_gateway.hpp"
#include "sage/segmenter.hpp"
#include "sage/vector_store.hpp"

namespace sage {

// ---------------------------------------------------------------------------
// Index construction

struct BuildResult {
  VectorStore store;
  std::size_t documents = 0;
  std::size_t chunks = 0;
  /// Files that could not be read or decoded; logged and skipped.
  std::size_t skipped_files = 0;
};

/// Ingest every regular file under corpus_dir (sorted by path, so ids are
/// stable across runs), segment with the given model, embed the chunks and
/// fill a store. Unreadable files are skipped with a warning; if nothing
/// survives, throws BuildError. The store's metadata records the embedder,
/// the model fingerprint and the config snapshot.
BuildResult build_index(const std::string& corpus_dir,
                        const SegmentationModel& seg_model,
                        const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Answering

struct AnswerAttempt {
  std::string answer;
  SelectionResult selection;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

/// One retrieval + answer pass with an explicit working min_k (the feedback
/// loop moves it between rounds; plain callers pass cfg.min_k). Checks the
/// question embedding against index metadata dimension and refuses to run
/// when the store was built with a different embedder than cfg asks for.
AnswerAttempt answer_once(const std::string& question, const VectorStore& store,
                          const PipelineConfig& cfg, std::size_t min_k,
                          LlmClient& llm,
                          QuestionType type = QuestionType::open_ended,
                          const std::vector<std::string>& options = {});

enum class Termination {
  /// Review score reached the acceptance bar fs.
  accepted,
  /// Round budget spent; the last answer stands.
  rounds_exhausted,
  /// Review reply unparseable even after one strict re-ask; the answer from
  /// that round stands (fail open, never fail the question).
  feedback_unparseable,
};

const char* to_string(Termination t);

struct RoundTrace {
  std::size_t round = 0;  // 1-based
  std::size_t min_k = 0;  // working floor used this round
  std::vector<std::int64_t> selected_chunk_ids;
  /// Normalized relevance of each selected chunk, parallel to the ids.
  std::vector<double> selected_scores;
  CutReason cut_reason = CutReason::gradient_stop;
  std::string answer;
  std::string feedback_raw;
  std::optional<FeedbackVerdict> verdict;  // empty when unparseable
  std::int64_t input_tokens = 0;           // answer + review for this round
  std::int64_t output_tokens = 0;
};

struct QueryTrace {
  std::string question_id;
  std::string question;
  std::vector<RoundTrace> rounds;
  std::string final_answer;
  Termination termination = Termination::accepted;
  std::int64_t input_tokens = 0;  // totals across rounds
  std::int64_t output_tokens = 0;
};

/// The bounded self-review loop: answer, ask the model to grade its own
/// answer, stop when the grade clears cfg.fs, otherwise nudge the working
/// min_k by the model's adjustment (clamped to [1, top_n]) and try again,
/// at most cfg.max_feedback_rounds rounds in total.
QueryTrace answer_with_feedback(const std::string& question,
                                const VectorStore& store,
                                const PipelineConfig& cfg, LlmClient& llm,
                                QuestionType type = QuestionType::open_ended,
                                const std::vector<std::string>& options = {},
                                const std::string& question_id = "");

/// One trace as a single JSON line.
std::string trace_to_json(const QueryTrace& trace);

// ---------------------------------------------------------------------------
// Evaluation

struct DatasetRecord {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::vector<std::string> options;  // non-empty => multiple choice
  QuestionType qtype = QuestionType::open_ended;
};

/// Parse a JSONL dataset. Malformed lines are counted into *skipped and
/// dropped rather than aborting the run.
std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        std::size_t* skipped = nullptr);

struct QuestionResult {
  std::string id;
  std::string prediction;
  /// Exact-match for multiple choice, token F1 for open-ended.
  double score = 0.0;
  double f1 = 0.0;
  double rouge_l = 0.0;
  double bleu_2 = 0.0;
  std::size_t rounds = 0;
  Termination termination = Termination::accepted;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

struct EvalReport {
  std::vector<QuestionResult> questions;
  std::size_t skipped_records = 0;
  /// Over the multiple-choice subset; 0 when there is none.
  double accuracy = 0.0;
  /// Means over the open-ended subset; 0 when there is none.
  double mean_f1 = 0.0;
  double mean_rouge_l = 0.0;
  double mean_bleu_2 = 0.0;
  /// Mean per-question score across everything, the quality term for
  /// cost-efficiency.
  double quality = 0.0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double total_cost = 0.0;
  /// quality / total_cost; absent when cost is zero.
  std::optional<double> efficiency;
  /// Fingerprint of the config the run used, for report provenance.
  std::string config_fingerprint;
};

/// Run answer_with_feedback over a dataset, cfg.eval_jobs questions at a
/// time (forced to 1 for scripted mocks, whose scripts are ordered). The
/// report's totals are exact sums of the per-question traces. Traces are
/// appended to *traces when given, in dataset order.
EvalReport evaluate(const std::vector<DatasetRecord>& records,
                    const VectorStore& store, const PipelineConfig& cfg,
                    LlmClient& llm, std::vector<QueryTrace>* traces = nullptr);

std::string report_to_json(const EvalReport& report);

/// Report as JSONL: one line per question, then one summary line.
void write_report(const EvalReport& report, std::ostream& out);

}  // namespace sage
