// sage: build, query and evaluate retrieval-augmented question answering
// over a locally segmented corpus.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sage/config.hpp"
#include "sage/error.hpp"
#include "sage/qa_pipeline.hpp"
#include "sage/segmenter.hpp"
#include "sage/vector_store.hpp"

namespace {

namespace fs = std::filesystem;

// 0 ok, 1 unexpected, 2 bad configuration or usage, 3 corpus/build failure,
// 4 upstream service failure.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBuild = 3;
constexpr int kExitUpstream = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sage::IoError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<fs::path> sorted_files(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw sage::BuildError("corpus directory does not exist: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

sage::PipelineConfig config_for_index(const std::string& config_path,
                                      const sage::VectorStore& store) {
  if (!config_path.empty()) return sage::load_config(config_path);
  // No config given: run with exactly what the index was built with.
  if (!store.meta().config_snapshot.empty()) {
    return sage::parse_config_json(store.meta().config_snapshot);
  }
  sage::PipelineConfig cfg;
  cfg.embedder = store.meta().embedder;
  return cfg;
}

int run_train_seg(const std::string& corpus_dir, const std::string& out_path,
                  std::size_t epochs, double lr, std::size_t batch,
                  std::size_t dim, std::uint64_t seed, double negative_ratio,
                  const std::string& feature_mode_name) {
  std::vector<std::string> paragraphs;
  for (const auto& file : sorted_files(corpus_dir)) {
    std::istringstream text(read_file(file.string()));
    std::string line;
    while (std::getline(text, line)) {
      // Paragraph = non-empty line, same convention the segmenter uses.
      const auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      const auto end = line.find_last_not_of(" \t\r");
      paragraphs.push_back(line.substr(begin, end - begin + 1));
    }
  }
  if (paragraphs.empty()) {
    throw sage::BuildError("corpus has no paragraphs to train on");
  }

  const std::vector<sage::SentencePair> pairs =
      sage::collect_pairs(paragraphs, negative_ratio, seed);
  if (pairs.empty()) {
    throw sage::BuildError(
        "corpus yielded no sentence pairs (paragraphs need at least two "
        "sentences)");
  }
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.label == 1.0 ? 1 : 0;

  sage::EmbedderSpec embedder;
  embedder.dimension = dim;

  sage::TrainConfig train_cfg;
  train_cfg.epochs = epochs;
  train_cfg.learning_rate = lr;
  train_cfg.batch_size = batch;
  train_cfg.seed = seed;
  train_cfg.feature_mode = sage::feature_mode_from_string(feature_mode_name);

  const sage::SegmentationModel model = sage::train(pairs, embedder, train_cfg);
  sage::save_model(model, out_path);
  std::cout << "trained on " << pairs.size() << " pairs (" << positives
            << " positive), model " << sage::model_fingerprint(model)
            << " -> " << out_path << '\n';
  return kExitOk;
}

int run_build(const std::string& corpus_dir, const std::string& index_dir,
              const std::string& model_path, const std::string& config_path) {
  sage::PipelineConfig cfg;
  if (!config_path.empty()) cfg = sage::load_config(config_path);

  const sage::SegmentationModel model = sage::load_model(model_path);
  if (model.embed_dim != 0) cfg.embedder.dimension = model.embed_dim;

  const sage::BuildResult result =
      sage::build_index(corpus_dir, model, cfg);
  result.store.save(index_dir);
  std::cout << "indexed " << result.chunks << " chunks from "
            << result.documents << " document(s)";
  if (result.skipped_files > 0) {
    std::cout << " (" << result.skipped_files << " file(s) skipped)";
  }
  std::cout << " -> " << index_dir << '\n';
  return kExitOk;
}

int run_query(const std::string& question, const std::string& index_dir,
              const std::string& config_path, const std::string& trace_path,
              const std::vector<std::string>& options) {
  const sage::VectorStore store = sage::VectorStore::load(index_dir);
  const sage::PipelineConfig cfg = config_for_index(config_path, store);
  const auto llm = sage::make_llm_client(cfg.llm);

  const sage::QuestionType qtype = options.empty()
                                       ? sage::QuestionType::open_ended
                                       : sage::QuestionType::multiple_choice;
  const sage::QueryTrace trace =
      sage::answer_with_feedback(question, store, cfg, *llm, qtype, options);

  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary | std::ios::app);
    if (!out) throw sage::IoError("cannot open trace file: " + trace_path);
    out << sage::trace_to_json(trace) << '\n';
  }
  std::cout << trace.final_answer << '\n';
  std::cerr << "rounds=" << trace.rounds.size() << " termination="
            << sage::to_string(trace.termination) << " tokens="
            << trace.input_tokens << "+" << trace.output_tokens << '\n';
  return kExitOk;
}

int run_eval(const std::string& dataset_path, const std::string& index_dir,
             const std::string& report_path, const std::string& config_path,
             std::size_t jobs, const std::string& trace_path) {
  const sage::VectorStore store = sage::VectorStore::load(index_dir);
  sage::PipelineConfig cfg = config_for_index(config_path, store);
  if (jobs > 0) cfg.eval_jobs = jobs;
  const auto llm = sage::make_llm_client(cfg.llm);

  std::size_t skipped = 0;
  const std::vector<sage::DatasetRecord> records =
      sage::load_dataset(dataset_path, &skipped);
  if (records.empty()) {
    throw sage::BuildError("dataset has no usable records: " + dataset_path);
  }

  std::vector<sage::QueryTrace> traces;
  sage::EvalReport report = sage::evaluate(
      records, store, cfg, *llm, trace_path.empty() ? nullptr : &traces);
  report.skipped_records = skipped;

  {
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw sage::IoError("cannot open report file: " + report_path);
    sage::write_report(report, out);
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
    if (!out) throw sage::IoError("cannot open trace file: " + trace_path);
    for (const auto& t : traces) out << sage::trace_to_json(t) << '\n';
  }
  std::cout << sage::report_to_json(report) << '\n';
  return kExitOk;
}

int run_segment(const std::string& text_path, const std::string& model_path,
                const std::string& config_path, double ss_override,
                std::size_t len_override) {
  sage::PipelineConfig cfg;
  if (!config_path.empty()) cfg = sage::load_config(config_path);
  const sage::SegmentationModel model = sage::load_model(model_path);
  if (model.embed_dim != 0) cfg.embedder.dimension = model.embed_dim;

  const double ss = ss_override >= 0.0 ? ss_override : cfg.ss;
  const std::size_t coarse_len =
      len_override > 0 ? len_override : cfg.coarse_len;

  const std::vector<sage::Chunk> chunks =
      sage::segment_corpus(read_file(text_path), fs::path(text_path).filename().string(),
                           model, cfg.embedder, ss, coarse_len);
  for (const auto& c : chunks) {
    std::cout << "[" << c.id << "] p" << c.paragraph << " s"
              << c.sentence_begin << ".." << c.sentence_end << " ("
              << c.token_count << " tokens) " << c.text << '\n';
  }
  std::cerr << chunks.size() << " chunk(s)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segmentation-aware retrieval QA pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  // train-seg
  auto* train_cmd =
      app.add_subcommand("train-seg", "train a sentence-pair segmentation model");
  std::string train_corpus, train_out, train_feature_mode = "full";
  std::size_t train_epochs = 10, train_batch = 64, train_dim = 256;
  double train_lr = 1e-3, train_negative_ratio = 1.0;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--corpus", train_corpus, "corpus directory")
      ->required();
  train_cmd->add_option("--out", train_out, "output model path")->required();
  train_cmd->add_option("--epochs", train_epochs, "training epochs");
  train_cmd->add_option("--lr", train_lr, "learning rate");
  train_cmd->add_option("--batch", train_batch, "mini-batch size");
  train_cmd->add_option("--dim", train_dim, "embedding dimension");
  train_cmd->add_option("--seed", train_seed, "random seed");
  train_cmd->add_option("--negative-ratio", train_negative_ratio,
                        "negatives per positive");
  train_cmd->add_option("--feature-mode", train_feature_mode,
                        "pair_only|pair_diff|pair_prod|full");

  // build
  auto* build_cmd = app.add_subcommand("build", "segment and index a corpus");
  std::string build_corpus, build_index_dir, build_model, build_config;
  build_cmd->add_option("--corpus", build_corpus, "corpus directory")
      ->required();
  build_cmd->add_option("--index", build_index_dir, "output index directory")
      ->required();
  build_cmd->add_option("--seg-model", build_model, "segmentation model path")
      ->required();
  build_cmd->add_option("--config", build_config, "pipeline config JSON");

  // query
  auto* query_cmd = app.add_subcommand("query", "answer one question");
  std::string query_question, query_index_dir, query_config, query_trace;
  std::vector<std::string> query_options;
  query_cmd->add_option("--question", query_question, "question text")
      ->required();
  query_cmd->add_option("--index", query_index_dir, "index directory")
      ->required();
  query_cmd->add_option("--config", query_config, "pipeline config JSON");
  query_cmd->add_option("--trace", query_trace, "append trace JSONL here");
  query_cmd->add_option("--option", query_options,
                        "answer option (repeat; makes it multiple choice)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate over a dataset");
  std::string eval_dataset, eval_index_dir, eval_report, eval_config,
      eval_trace;
  std::size_t eval_jobs = 0;
  eval_cmd->add_option("--dataset", eval_dataset, "dataset JSONL")->required();
  eval_cmd->add_option("--index", eval_index_dir, "index directory")
      ->required();
  eval_cmd->add_option("--report", eval_report, "output report JSONL")
      ->required();
  eval_cmd->add_option("--config", eval_config, "pipeline config JSON");
  eval_cmd->add_option("--jobs", eval_jobs, "worker threads (0 = config)");
  eval_cmd->add_option("--trace", eval_trace, "write traces JSONL here");

  // segment
  auto* segment_cmd =
      app.add_subcommand("segment", "segment a document and print the chunks");
  std::string seg_text, seg_model, seg_config;
  double seg_ss = -1.0;
  std::size_t seg_len = 0;
  segment_cmd->add_option("--text", seg_text, "document to segment")
      ->required();
  segment_cmd->add_option("--seg-model", seg_model, "segmentation model path")
      ->required();
  segment_cmd->add_option("--config", seg_config, "pipeline config JSON");
  segment_cmd->add_option("--ss", seg_ss, "split threshold override");
  segment_cmd->add_option("--l", seg_len, "coarse token budget override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Help/version land here with code 0; anything else is a usage error.
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) {
      return run_train_seg(train_corpus, train_out, train_epochs, train_lr,
                           train_batch, train_dim, train_seed,
                           train_negative_ratio, train_feature_mode);
    }
    if (build_cmd->parsed()) {
      return run_build(build_corpus, build_index_dir, build_model,
                       build_config);
    }
    if (query_cmd->parsed()) {
      return run_query(query_question, query_index_dir, query_config,
                       query_trace, query_options);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval_dataset, eval_index_dir, eval_report, eval_config,
                      eval_jobs, eval_trace);
    }
    if (segment_cmd->parsed()) {
      return run_segment(seg_text, seg_model, seg_config, seg_ss, seg_len);
    }
  } catch (const sage::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sage::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sage::BuildError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBuild;
  } catch (const sage::TransportError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUpstream;
  } catch (const sage::ScriptExhaustedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUpstream;
  } catch (const sage::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUpstream;
  } catch (const sage::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}
