// Command-line front end for the two-stage triplet extraction pipeline.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aste/checkpoint.hpp"
#include "aste/kernels.hpp"
#include "aste/pipeline.hpp"

using namespace aste;

namespace {

struct CommonOpts {
  RunConfig run;
  std::string ablation = "none";
  bool serial_kernels = false;

  void apply() {
    run.ablation = ablation_from(ablation);
    if (serial_kernels) kernels::set_exec_mode(kernels::ExecMode::Serial);
  }
};

void add_encoder_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--hidden", o.run.encoder.hidden, "encoder hidden size");
  cmd->add_option("--layers", o.run.encoder.layers, "encoder layer count");
  cmd->add_option("--heads", o.run.encoder.heads, "attention head count");
  cmd->add_option("--ffn", o.run.encoder.ffn, "feed-forward size");
  cmd->add_option("--max-len", o.run.encoder.max_len, "maximum sequence length");
  cmd->add_option("--dropout", o.run.encoder.dropout, "dropout rate during training");
  cmd->add_flag("--serial-kernels", o.serial_kernels, "run dense kernels single-threaded");
}

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--lr", o.run.lr, "Adam learning rate");
  cmd->add_option("--batch-size", o.run.batch_size, "sentences per optimizer step");
  cmd->add_option("--min-freq", o.run.min_freq, "vocabulary frequency cutoff");
  cmd->add_option("--seed", o.run.seed, "random seed");
  cmd->add_option("--ablation", o.ablation, "ablation mode (a..f)")
      ->check(CLI::IsMember({"none", "a", "b", "c", "d", "e", "f"}));
}

std::unique_ptr<ExtractionModel> load_extraction(const std::string& path, Vocabulary& vocab,
                                                 CheckpointMeta* meta = nullptr) {
  const LoadedCheckpoint ckpt = load_checkpoint(path);
  check(ckpt.stage == "extract", path, " is a '", ckpt.stage, "' checkpoint, expected 'extract'");
  auto model = std::make_unique<ExtractionModel>(ckpt.config, 0);
  restore_params(model->params(), ckpt);
  vocab = ckpt.vocab;
  if (meta) *meta = ckpt.meta;
  return model;
}

std::unique_ptr<MatchingModel> load_matching(const std::string& path, CheckpointMeta* meta) {
  const LoadedCheckpoint ckpt = load_checkpoint(path);
  check(ckpt.stage == "match", path, " is a '", ckpt.stage, "' checkpoint, expected 'match'");
  auto model = std::make_unique<MatchingModel>(ckpt.config, 0);
  restore_params(model->params(), ckpt);
  if (meta) *meta = ckpt.meta;
  return model;
}

void print_report(std::ostream& os, const std::string& prefix, const EvalReport& r) {
  os << prefix << "precision: " << std::setprecision(6) << r.precision << "\n"
     << prefix << "recall: " << r.recall << "\n"
     << prefix << "f1: " << r.f1 << "\n"
     << prefix << "tp: " << r.tp << "\n"
     << prefix << "predicted: " << r.predicted << "\n"
     << prefix << "gold: " << r.gold << "\n";
}

nlohmann::json report_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"tp", r.tp},               {"predicted", r.predicted}, {"gold", r.gold}};
}

nlohmann::json triplet_json(const Triplet& t, double probability = -1.0) {
  nlohmann::json j = {{"target", {t.target.start, t.target.end}},
                      {"opinion", {t.opinion.start, t.opinion.end}},
                      {"polarity", polarity_name(t.polarity)}};
  if (probability >= 0.0) j["probability"] = probability;
  return j;
}

// Reads prediction inputs: annotated lines keep only their tokens, bare
// lines are whitespace-split.
std::vector<std::vector<std::string>> read_plain_sentences(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open input file: ", path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.find("####") != std::string::npos) {
      out.push_back(parse_line(line, line_no).tokens);
    } else {
      std::istringstream is(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (is >> tok) tokens.push_back(tok);
      out.push_back(std::move(tokens));
    }
  }
  return out;
}

int cmd_stats(const std::vector<std::string>& files) {
  for (const auto& path : files) {
    const auto [sentences, stats] = load_split(path);
    std::cout << "file: " << path << "\n"
              << "sentences: " << stats.sentences << "\n"
              << "pos: " << stats.pos << "\n"
              << "neu: " << stats.neu << "\n"
              << "neg: " << stats.neg << "\n";
  }
  return 0;
}

int cmd_train_extract(CommonOpts& o, int epochs) {
  o.apply();
  o.run.extract_epochs = epochs;
  const auto [train, tstats] = load_split(o.run.train_path);
  std::vector<AnnotatedSentence> dev;
  if (!o.run.dev_path.empty()) dev = load_split(o.run.dev_path).first;

  TrainedExtraction trained = train_extraction(o.run, train, dev);
  for (const auto& log : trained.log)
    std::cout << "epoch: " << log.epoch << " train_loss: " << log.train_loss
              << " dev_span_f1: " << log.dev_metric << "\n";
  std::cout << "best_epoch: " << trained.meta.epoch << "\n"
            << "best_dev_span_f1: " << trained.meta.dev_metric << "\n";

  std::filesystem::create_directories(o.run.out_dir);
  const std::string path = o.run.out_dir + "/extract.ckpt";
  save_checkpoint(path, "extract", trained.model->config(), trained.vocab,
                  trained.model->params(), trained.meta);
  std::cout << "checkpoint: " << path << "\n";
  return 0;
}

int cmd_train_match(CommonOpts& o, int epochs, const std::string& extract_path,
                    std::vector<std::uint64_t> seeds) {
  o.apply();
  o.run.match_epochs = epochs;
  const auto [train, tstats] = load_split(o.run.train_path);
  std::vector<AnnotatedSentence> dev, test;
  if (!o.run.dev_path.empty()) dev = load_split(o.run.dev_path).first;
  if (!o.run.test_path.empty()) test = load_split(o.run.test_path).first;

  Vocabulary vocab;
  auto extraction = load_extraction(extract_path, vocab);

  if (seeds.empty()) seeds.push_back(o.run.seed);
  double best_dev = -1.0;
  std::uint64_t best_seed = seeds.front();

  std::filesystem::create_directories(o.run.out_dir);
  for (std::uint64_t seed : seeds) {
    RunConfig cfg = o.run;
    cfg.seed = seed;
    TrainedMatching trained = train_matching(cfg, *extraction, vocab, train, dev);
    std::cout << "seed: " << seed << " best_epoch: " << trained.meta.epoch
              << " dev_triplet_f1: " << trained.meta.dev_metric;
    if (!test.empty()) {
      const EvalReport tr =
          evaluate_pipeline(*extraction, *trained.model, vocab, test, cfg.ablation);
      std::cout << " test_triplet_f1: " << tr.f1;
    }
    std::cout << "\n";
    if (seeds.size() == 1)
      for (const auto& log : trained.log)
        std::cout << "epoch: " << log.epoch << " train_loss: " << log.train_loss
                  << " dev_triplet_f1: " << log.dev_metric << "\n";

    if (trained.meta.dev_metric > best_dev) {
      best_dev = trained.meta.dev_metric;
      best_seed = seed;
      save_checkpoint(o.run.out_dir + "/match.ckpt", "match", trained.model->config(), vocab,
                      trained.model->params(), trained.meta);
    }
  }
  std::cout << "best_seed: " << best_seed << "\n"
            << "best_dev_triplet_f1: " << best_dev << "\n"
            << "checkpoint: " << o.run.out_dir + "/match.ckpt" << "\n";
  return 0;
}

int cmd_predict(const std::string& extract_path, const std::string& match_path,
                const std::string& input, const std::string& output) {
  Vocabulary vocab;
  auto extraction = load_extraction(extract_path, vocab);
  CheckpointMeta match_meta;
  auto matching = load_matching(match_path, &match_meta);

  const auto sentences = read_plain_sentences(input);
  std::ofstream out(output);
  check(out.good(), "cannot write predictions to ", output);

  int index = 0;
  for (const auto& tokens : sentences) {
    const SentencePrediction p =
        predict_sentence(*extraction, *matching, vocab, tokens, match_meta.ablation);
    nlohmann::json rec;
    rec["index"] = index++;
    rec["tokens"] = tokens;
    rec["skipped"] = p.skipped;
    nlohmann::json triplets = nlohmann::json::array();
    for (std::size_t i = 0; i < p.triplets.size(); ++i)
      triplets.push_back(triplet_json(p.triplets[i], p.probabilities[i]));
    rec["triplets"] = triplets;
    out << rec.dump() << "\n";
  }
  std::cout << "sentences: " << index << "\n"
            << "predictions: " << output << "\n";
  return 0;
}

int cmd_evaluate(const std::string& extract_path, const std::string& match_path,
                 const std::string& test_path, const std::vector<std::string>& breakdowns,
                 const std::string& json_out) {
  Vocabulary vocab;
  auto extraction = load_extraction(extract_path, vocab);
  CheckpointMeta match_meta;
  auto matching = load_matching(match_path, &match_meta);

  const auto [test, stats] = load_split(test_path);
  std::vector<std::vector<Triplet>> preds;
  const EvalReport global =
      evaluate_pipeline(*extraction, *matching, vocab, test, match_meta.ablation, &preds);
  std::vector<std::vector<Triplet>> gold;
  for (const auto& s : test) gold.push_back(s.triplets);

  std::cout << "split: " << test_path << "\n";
  print_report(std::cout, "", global);

  nlohmann::json records = nlohmann::json::array();
  nlohmann::json grec = report_json(global);
  grec["scope"] = "global";
  records.push_back(grec);

  for (const std::string& mode : breakdowns) {
    if (mode == "triplet-count") {
      for (const auto& bucket : breakdown_by_triplet_count(preds, gold)) {
        std::cout << "bucket: " << bucket.label << " sentences: " << bucket.sentences << "\n";
        print_report(std::cout, "  ", bucket.report);
        nlohmann::json brec = report_json(bucket.report);
        brec["scope"] = "triplet-count";
        brec["bucket"] = bucket.label;
        brec["sentences"] = bucket.sentences;
        records.push_back(brec);
      }
    } else if (mode == "one-to-many") {
      std::vector<std::vector<Triplet>> sub_pred, sub_gold;
      for (std::size_t i : one_to_many_indices(gold)) {
        sub_pred.push_back(preds[i]);
        sub_gold.push_back(gold[i]);
      }
      const EvalReport sub = score(sub_pred, sub_gold);
      std::cout << "one-to-many sentences: " << sub_gold.size() << "\n";
      print_report(std::cout, "  ", sub);
      nlohmann::json srec = report_json(sub);
      srec["scope"] = "one-to-many";
      srec["sentences"] = sub_gold.size();
      records.push_back(srec);
    } else {
      fail("unknown breakdown '", mode, "' (expected triplet-count or one-to-many)");
    }
  }

  if (!json_out.empty()) {
    std::ofstream jf(json_out);
    check(jf.good(), "cannot write report to ", json_out);
    for (const auto& rec : records) jf << rec.dump() << "\n";
  }
  return 0;
}

int cmd_dump_attention(const std::string& extract_path, const std::string& match_path,
                       const std::string& sentence, int pair_index) {
  Vocabulary vocab;
  auto extraction = load_extraction(extract_path, vocab);
  CheckpointMeta match_meta;
  auto matching = load_matching(match_path, &match_meta);

  std::istringstream is(sentence);
  std::vector<std::string> tokens;
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  check(!tokens.empty(), "empty sentence");

  AnnotatedSentence plain;
  plain.tokens = tokens;
  const std::vector<int> ids = encode_tokens(plain, vocab);
  const SpanSets spans = extraction->predict_spans(ids);
  const auto pairs = build_pairs(spans);
  check(!pairs.empty(), "stage 1 found no pairs in this sentence (targets: ",
        spans.targets.size(), ", opinions: ", spans.opinions.size(), ")");
  check(pair_index >= 0 && pair_index < static_cast<int>(pairs.size()), "pair index ", pair_index,
        " out of range, sentence has ", pairs.size(), " pairs");

  const auto chunks =
      build_compound(ids, spans, pairs, matching->config().max_len, match_meta.ablation);

  // locate the chunk holding the requested pair
  std::size_t flat = 0;
  for (const auto& chunk : chunks) {
    if (flat + chunk.pairs.size() <= static_cast<std::size_t>(pair_index)) {
      flat += chunk.pairs.size();
      continue;
    }
    const PerceivablePair& pair = chunk.pairs[static_cast<std::size_t>(pair_index) - flat];
    const Span& target = spans.targets[static_cast<std::size_t>(pair.target_index)];
    const int word_row = 1 + target.start;
    const int marker_row = pair.fuse_target;

    EncoderOutput out = matching->encode_compound(chunk, true);
    const auto word_rows = dump_attention(out, word_row);
    const auto marker_rows = dump_attention(out, marker_row);

    auto label_of = [&](int pos) {
      const int tok_id = chunk.token_ids[static_cast<std::size_t>(pos)];
      if (tok_id < Vocabulary::kReservedCount) return vocab.token(tok_id);
      return tokens[static_cast<std::size_t>(chunk.word_of[static_cast<std::size_t>(pos)])];
    };

    std::cout << "pair: " << pair_index << " target: [" << target.start << "," << target.end
              << "] opinion: ["
              << spans.opinions[static_cast<std::size_t>(pair.opinion_index)].start << ","
              << spans.opinions[static_cast<std::size_t>(pair.opinion_index)].end << "]\n";
    std::cout << "columns:";
    for (int j = 0; j < chunk.length(); ++j) std::cout << " " << label_of(j);
    std::cout << "\n";
    for (std::size_t layer = 0; layer < word_rows.size(); ++layer) {
      for (std::size_t head = 0; head < word_rows[layer].size(); ++head) {
        std::cout << "layer " << layer << " head " << head << " word-row:";
        for (std::size_t j = 0; j < word_rows[layer][head].size(); ++j)
          std::cout << " " << std::setprecision(4) << word_rows[layer][head][j];
        std::cout << "\n";
        std::cout << "layer " << layer << " head " << head << " marker-row:";
        for (std::size_t j = 0; j < marker_rows[layer][head].size(); ++j)
          std::cout << " " << std::setprecision(4) << marker_rows[layer][head][j];
        std::cout << "\n";
      }
    }
    return 0;
  }
  fail("pair index not reachable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage aspect sentiment triplet extraction"};
  app.require_subcommand(1);

  // stats
  std::vector<std::string> stats_files;
  CLI::App* stats_cmd = app.add_subcommand("stats", "dataset statistics per split file");
  stats_cmd->add_option("files", stats_files, "dataset files")->required()->check(CLI::ExistingFile);

  // train-extract
  CommonOpts ext_opts;
  int ext_epochs = 3;
  CLI::App* ext_cmd = app.add_subcommand("train-extract", "train the stage-1 tagging model");
  ext_cmd->add_option("--train", ext_opts.run.train_path, "training split")->required();
  ext_cmd->add_option("--dev", ext_opts.run.dev_path, "development split");
  ext_cmd->add_option("--out", ext_opts.run.out_dir, "output directory")->required();
  ext_cmd->add_option("--epochs", ext_epochs, "training epochs");
  add_encoder_flags(ext_cmd, ext_opts);
  add_train_flags(ext_cmd, ext_opts);

  // train-match
  CommonOpts match_opts;
  int match_epochs = 10;
  std::string match_extract;
  std::vector<std::uint64_t> match_seeds;
  CLI::App* match_cmd = app.add_subcommand("train-match", "train the stage-2 matching model");
  match_cmd->add_option("--train", match_opts.run.train_path, "training split")->required();
  match_cmd->add_option("--dev", match_opts.run.dev_path, "development split");
  match_cmd->add_option("--test", match_opts.run.test_path, "test split for the seed sweep report");
  match_cmd->add_option("--extract-ckpt", match_extract, "stage-1 checkpoint")->required();
  match_cmd->add_option("--out", match_opts.run.out_dir, "output directory")->required();
  match_cmd->add_option("--epochs", match_epochs, "training epochs");
  match_cmd->add_option("--seeds", match_seeds, "seed sweep; the best dev seed is kept");
  add_encoder_flags(match_cmd, match_opts);
  add_train_flags(match_cmd, match_opts);

  // predict
  std::string pr_extract, pr_match, pr_input, pr_output;
  CLI::App* pr_cmd = app.add_subcommand("predict", "run the pipeline over raw sentences");
  pr_cmd->add_option("--extract-ckpt", pr_extract, "stage-1 checkpoint")->required();
  pr_cmd->add_option("--match-ckpt", pr_match, "stage-2 checkpoint")->required();
  pr_cmd->add_option("--input", pr_input, "one sentence per line")->required();
  pr_cmd->add_option("--output", pr_output, "predictions file (one record per line)")->required();

  // evaluate
  std::string ev_extract, ev_match, ev_test, ev_json;
  std::vector<std::string> ev_breakdowns;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "score the pipeline on an annotated split");
  ev_cmd->add_option("--extract-ckpt", ev_extract, "stage-1 checkpoint")->required();
  ev_cmd->add_option("--match-ckpt", ev_match, "stage-2 checkpoint")->required();
  ev_cmd->add_option("--test", ev_test, "annotated split")->required();
  ev_cmd->add_option("--breakdown", ev_breakdowns, "triplet-count and/or one-to-many")
      ->check(CLI::IsMember({"triplet-count", "one-to-many"}));
  ev_cmd->add_option("--json-out", ev_json, "machine-readable report (one object per line)");

  // dump-attention
  std::string da_extract, da_match, da_sentence;
  int da_pair = 0;
  CLI::App* da_cmd = app.add_subcommand("dump-attention", "attention rows for one pair");
  da_cmd->add_option("--extract-ckpt", da_extract, "stage-1 checkpoint")->required();
  da_cmd->add_option("--match-ckpt", da_match, "stage-2 checkpoint")->required();
  da_cmd->add_option("--sentence", da_sentence, "raw sentence")->required();
  da_cmd->add_option("--pair", da_pair, "pair index in row-major grid order");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats_cmd->parsed()) return cmd_stats(stats_files);
    if (ext_cmd->parsed()) return cmd_train_extract(ext_opts, ext_epochs);
    if (match_cmd->parsed())
      return cmd_train_match(match_opts, match_epochs, match_extract, match_seeds);
    if (pr_cmd->parsed()) return cmd_predict(pr_extract, pr_match, pr_input, pr_output);
    if (ev_cmd->parsed()) return cmd_evaluate(ev_extract, ev_match, ev_test, ev_breakdowns, ev_json);
    if (da_cmd->parsed()) return cmd_dump_attention(da_extract, da_match, da_sentence, da_pair);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
