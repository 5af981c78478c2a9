#include "sage/qa_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/metrics.hpp"

namespace sage {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::size_t clamp_min_k(std::size_t value, std::size_t top_n) {
  return std::clamp<std::size_t>(value, 1, top_n);
}

std::vector<std::string> selected_texts(const VectorStore& store,
                                        const SelectionResult& sel) {
  std::vector<std::string> texts;
  texts.reserve(sel.selected.size());
  for (const auto& sc : sel.selected) texts.push_back(store.chunk(sc.chunk_id).text);
  return texts;
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::accepted:
      return "accepted";
    case Termination::rounds_exhausted:
      return "rounds-exhausted";
    case Termination::feedback_unparseable:
      return "feedback-unparseable";
  }
  return "unknown";
}

BuildResult build_index(const std::string& corpus_dir,
                        const SegmentationModel& seg_model,
                        const PipelineConfig& cfg) {
  cfg.validate();
  if (seg_model.embed_dim != 0 &&
      seg_model.embed_dim != cfg.embedder.dimension) {
    throw ConflictError("segmentation model expects embedding dimension " +
                        std::to_string(seg_model.embed_dim) +
                        ", config says " +
                        std::to_string(cfg.embedder.dimension));
  }
  if (!fs::is_directory(corpus_dir)) {
    throw BuildError("corpus directory does not exist: " + corpus_dir);
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  // Sorted ingestion keeps chunk ids stable run to run.
  std::sort(files.begin(), files.end());

  BuildResult result{VectorStore(cfg.embedder.dimension), 0, 0, 0};
  std::int64_t next_id = 0;

  for (const auto& file : files) {
    std::string text;
    {
      std::ifstream in(file, std::ios::binary);
      if (!in) {
        std::cerr << "warning: skipping unreadable file " << file << '\n';
        ++result.skipped_files;
        continue;
      }
      std::ostringstream buffer;
      buffer << in.rdbuf();
      if (in.bad()) {
        std::cerr << "warning: skipping unreadable file " << file << '\n';
        ++result.skipped_files;
        continue;
      }
      text = buffer.str();
    }

    const std::string doc_id =
        fs::relative(file, corpus_dir).generic_string();
    std::vector<Chunk> chunks =
        segment_corpus(text, doc_id, seg_model, cfg.embedder, cfg.ss,
                       cfg.coarse_len, next_id);
    ++result.documents;
    if (chunks.empty()) continue;
    next_id += static_cast<std::int64_t>(chunks.size());

    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    std::vector<Vector> vectors = embed_batch(texts, cfg.embedder);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      result.store.insert(std::move(chunks[i]), std::move(vectors[i]));
    }
    result.chunks += chunks.size();
  }

  if (result.store.size() == 0) {
    throw BuildError("corpus produced no chunks (" +
                     std::to_string(files.size()) + " file(s), " +
                     std::to_string(result.skipped_files) + " unreadable)");
  }

  IndexMeta meta;
  meta.embedder = cfg.embedder;
  meta.seg_model_fingerprint = model_fingerprint(seg_model);
  meta.config_snapshot = config_to_json(cfg);
  result.store.set_meta(std::move(meta));
  return result;
}

AnswerAttempt answer_once(const std::string& question, const VectorStore& store,
                          const PipelineConfig& cfg, std::size_t min_k,
                          LlmClient& llm, QuestionType type,
                          const std::vector<std::string>& options) {
  if (!(store.meta().embedder == cfg.embedder)) {
    throw ConflictError(
        "index was built with a different embedder than the configuration "
        "asks for; rebuild the index or fix the config");
  }

  const Vector qv = embed_text(question, cfg.embedder);
  const std::vector<QueryHit> hits = store.query_top_n(qv, cfg.top_n);

  std::vector<Chunk> candidates;
  candidates.reserve(hits.size());
  for (const auto& hit : hits) candidates.push_back(store.chunk(hit.chunk_id));

  const std::vector<ScoredChunk> ranked =
      rerank(question, candidates, cfg.reranker, cfg.embedder);

  AnswerAttempt attempt;
  attempt.selection =
      select_gradient(ranked, clamp_min_k(min_k, cfg.top_n), cfg.g);

  const std::string prompt = build_answer_prompt(
      question, selected_texts(store, attempt.selection), type, options);
  const LlmResponse resp =
      llm.complete({cfg.llm.model, prompt, cfg.llm.max_output_tokens});
  attempt.answer = resp.text;
  attempt.input_tokens = resp.input_tokens;
  attempt.output_tokens = resp.output_tokens;
  return attempt;
}

QueryTrace answer_with_feedback(const std::string& question,
                                const VectorStore& store,
                                const PipelineConfig& cfg, LlmClient& llm,
                                QuestionType type,
                                const std::vector<std::string>& options,
                                const std::string& question_id) {
  cfg.validate();

  QueryTrace trace;
  trace.question_id = question_id;
  trace.question = question;

  std::size_t working_min_k = clamp_min_k(cfg.min_k, cfg.top_n);

  for (std::size_t round = 1; round <= cfg.max_feedback_rounds; ++round) {
    AnswerAttempt attempt =
        answer_once(question, store, cfg, working_min_k, llm, type, options);

    RoundTrace rt;
    rt.round = round;
    rt.min_k = working_min_k;
    for (const auto& sc : attempt.selection.selected) {
      rt.selected_chunk_ids.push_back(sc.chunk_id);
      rt.selected_scores.push_back(sc.normalized_score);
    }
    rt.cut_reason = attempt.selection.cut_reason;
    rt.answer = attempt.answer;
    rt.input_tokens = attempt.input_tokens;
    rt.output_tokens = attempt.output_tokens;

    const std::vector<std::string> context =
        selected_texts(store, attempt.selection);
    LlmResponse review = llm.complete(
        {cfg.llm.model, build_feedback_prompt(question, context, attempt.answer),
         cfg.llm.max_output_tokens});
    rt.input_tokens += review.input_tokens;
    rt.output_tokens += review.output_tokens;
    rt.feedback_raw = review.text;

    std::optional<FeedbackVerdict> verdict;
    try {
      verdict = parse_feedback(review.text);
    } catch (const ParseError&) {
      // One strict re-ask, then fail open: an unreviewable answer is still
      // an answer.
      LlmResponse retry = llm.complete(
          {cfg.llm.model,
           build_feedback_prompt(question, context, attempt.answer,
                                 /*strict=*/true),
           cfg.llm.max_output_tokens});
      rt.input_tokens += retry.input_tokens;
      rt.output_tokens += retry.output_tokens;
      rt.feedback_raw += "\n--- strict retry ---\n" + retry.text;
      try {
        verdict = parse_feedback(retry.text);
      } catch (const ParseError&) {
        verdict.reset();
      }
    }
    rt.verdict = verdict;

    trace.input_tokens += rt.input_tokens;
    trace.output_tokens += rt.output_tokens;
    trace.rounds.push_back(std::move(rt));
    trace.final_answer = attempt.answer;

    if (!verdict) {
      trace.termination = Termination::feedback_unparseable;
      break;
    }
    if (verdict->quality_score >= cfg.fs) {
      trace.termination = Termination::accepted;
      break;
    }
    if (round == cfg.max_feedback_rounds) {
      trace.termination = Termination::rounds_exhausted;
      break;
    }
    working_min_k = clamp_min_k(
        static_cast<std::size_t>(std::max<std::int64_t>(
            1, static_cast<std::int64_t>(working_min_k) + verdict->adjustment)),
        cfg.top_n);
  }
  return trace;
}

std::string trace_to_json(const QueryTrace& trace) {
  json rounds = json::array();
  for (const auto& rt : trace.rounds) {
    json round = {
        {"round", rt.round},
        {"min_k", rt.min_k},
        {"selected_chunk_ids", rt.selected_chunk_ids},
        {"selected_scores", rt.selected_scores},
        {"cut_reason", to_string(rt.cut_reason)},
        {"answer", rt.answer},
        {"feedback_raw", rt.feedback_raw},
        {"input_tokens", rt.input_tokens},
        {"output_tokens", rt.output_tokens},
    };
    if (rt.verdict) {
      round["score"] = rt.verdict->quality_score;
      round["adjust"] = rt.verdict->adjustment;
    } else {
      round["score"] = nullptr;
      round["adjust"] = nullptr;
    }
    rounds.push_back(std::move(round));
  }
  const json root = {
      {"question_id", trace.question_id},
      {"question", trace.question},
      {"final_answer", trace.final_answer},
      {"termination", to_string(trace.termination)},
      {"input_tokens", trace.input_tokens},
      {"output_tokens", trace.output_tokens},
      {"rounds", rounds},
  };
  return root.dump();
}

std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        std::size_t* skipped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);

  std::vector<DatasetRecord> records;
  std::size_t bad = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json row = json::parse(line);
      DatasetRecord rec;
      rec.id = row.contains("id") && row["id"].is_string()
                   ? row["id"].get<std::string>()
                   : "line-" + std::to_string(line_no);
      rec.question = row.at("question").get<std::string>();
      rec.answers = row.at("answers").get<std::vector<std::string>>();
      if (row.contains("options")) {
        rec.options = row["options"].get<std::vector<std::string>>();
      }
      if (row.contains("qtype")) {
        const std::string qtype = row["qtype"].get<std::string>();
        if (qtype == "multiple_choice") {
          rec.qtype = QuestionType::multiple_choice;
        } else if (qtype == "open_ended") {
          rec.qtype = QuestionType::open_ended;
        } else {
          throw IoError("unknown qtype");
        }
      } else {
        rec.qtype = rec.options.empty() ? QuestionType::open_ended
                                        : QuestionType::multiple_choice;
      }
      if (rec.question.empty() || rec.answers.empty() ||
          (rec.qtype == QuestionType::multiple_choice && rec.options.empty())) {
        throw IoError("incomplete record");
      }
      records.push_back(std::move(rec));
    } catch (const std::exception&) {
      std::cerr << "warning: skipping malformed dataset line " << line_no
                << '\n';
      ++bad;
    }
  }
  if (skipped) *skipped = bad;
  return records;
}

EvalReport evaluate(const std::vector<DatasetRecord>& records,
                    const VectorStore& store, const PipelineConfig& cfg,
                    LlmClient& llm, std::vector<QueryTrace>* traces) {
  cfg.validate();

  EvalReport report;
  if (records.empty()) return report;

  // A scripted mock replays turns in order, which only lines up with
  // questions when they run one at a time.
  std::size_t jobs = cfg.eval_jobs;
  if (cfg.llm.kind == LlmKind::scripted_mock) jobs = 1;
  jobs = std::min(jobs, records.size());

  std::vector<QueryTrace> all_traces(records.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= records.size()) return;
      const DatasetRecord& rec = records[i];
      try {
        all_traces[i] =
            answer_with_feedback(rec.question, store, cfg, llm, rec.qtype,
                                 rec.options, rec.id);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::size_t mc_count = 0, open_count = 0;
  double mc_correct = 0.0, f1_sum = 0.0, rouge_sum = 0.0, bleu_sum = 0.0;
  double score_sum = 0.0;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& rec = records[i];
    const QueryTrace& trace = all_traces[i];

    QuestionResult qr;
    qr.id = rec.id;
    qr.prediction = trace.final_answer;
    qr.rounds = trace.rounds.size();
    qr.termination = trace.termination;
    qr.input_tokens = trace.input_tokens;
    qr.output_tokens = trace.output_tokens;

    qr.f1 = f1_match(qr.prediction, rec.answers);
    for (const auto& gold : rec.answers) {
      qr.rouge_l = std::max(qr.rouge_l, rouge_l(qr.prediction, gold));
      qr.bleu_2 = std::max(qr.bleu_2, bleu_n(qr.prediction, gold, 2));
    }

    if (rec.qtype == QuestionType::multiple_choice) {
      const std::string canon = canonical_answer(qr.prediction);
      bool match = false;
      for (const auto& gold : rec.answers) {
        if (canon == canonical_answer(gold)) {
          match = true;
          break;
        }
      }
      qr.score = match ? 1.0 : 0.0;
      mc_correct += qr.score;
      ++mc_count;
    } else {
      qr.score = qr.f1;
      f1_sum += qr.f1;
      rouge_sum += qr.rouge_l;
      bleu_sum += qr.bleu_2;
      ++open_count;
    }
    score_sum += qr.score;
    report.input_tokens += qr.input_tokens;
    report.output_tokens += qr.output_tokens;
    report.questions.push_back(std::move(qr));
  }

  if (mc_count > 0) report.accuracy = mc_correct / mc_count;
  if (open_count > 0) {
    report.mean_f1 = f1_sum / open_count;
    report.mean_rouge_l = rouge_sum / open_count;
    report.mean_bleu_2 = bleu_sum / open_count;
  }
  report.quality = score_sum / static_cast<double>(records.size());
  const CostReport costs =
      make_cost_report(report.input_tokens, report.output_tokens, cfg.price_in,
                       cfg.price_out, report.quality);
  report.total_cost = costs.cost;
  report.efficiency = costs.efficiency;
  report.config_fingerprint = config_fingerprint(cfg);

  if (traces) {
    for (auto& t : all_traces) traces->push_back(std::move(t));
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json root = {
      {"type", "summary"},
      {"n_questions", report.questions.size()},
      {"skipped_records", report.skipped_records},
      {"accuracy", report.accuracy},
      {"mean_f1", report.mean_f1},
      {"mean_rouge_l", report.mean_rouge_l},
      {"mean_bleu_2", report.mean_bleu_2},
      {"quality", report.quality},
      {"input_tokens", report.input_tokens},
      {"output_tokens", report.output_tokens},
      {"total_cost", report.total_cost},
      {"config_fingerprint", report.config_fingerprint},
  };
  if (report.efficiency) {
    root["efficiency"] = *report.efficiency;
  } else {
    root["efficiency"] = nullptr;
  }
  return root.dump();
}

void write_report(const EvalReport& report, std::ostream& out) {
  for (const auto& qr : report.questions) {
    const json row = {
        {"type", "question"},
        {"id", qr.id},
        {"prediction", qr.prediction},
        {"score", qr.score},
        {"f1", qr.f1},
        {"rouge_l", qr.rouge_l},
        {"bleu_2", qr.bleu_2},
        {"rounds", qr.rounds},
        {"termination", to_string(qr.termination)},
        {"input_tokens", qr.input_tokens},
        {"output_tokens", qr.output_tokens},
    };
    out << row.dump() << '\n';
  }
  out << report_to_json(report) << '\n';
}

}  // namespace sage
