#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aste/adam.hpp"
#include "aste/checkpoint.hpp"
#include "aste/corpus.hpp"
#include "aste/evaluation.hpp"
#include "aste/extraction.hpp"
#include "aste/matching.hpp"
#include "aste/pairing.hpp"

namespace aste {

struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  EncoderConfig encoder;  // vocab field is filled from the training split
  int extract_epochs = 3;
  int match_epochs = 10;
  double lr = 5e-5;
  int batch_size = 8;
  int min_freq = 1;
  std::uint64_t seed = 1;
  AblationMode ablation = AblationMode::None;
  std::string out_dir;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-sentence loss
  double dev_metric = 0.0;
};

struct TrainedExtraction {
  std::unique_ptr<ExtractionModel> model;
  Vocabulary vocab;
  CheckpointMeta meta;  // best epoch and dev span-F1
  std::vector<EpochLog> log;
};

struct TrainedMatching {
  std::unique_ptr<MatchingModel> model;
  CheckpointMeta meta;  // best epoch and dev triplet-F1 of the pipeline
  std::vector<EpochLog> log;
};

/// Stage-1 training; selects the epoch with the best dev span-F1.
/// extract_epochs == 0 returns the freshly initialized model.
TrainedExtraction train_extraction(const RunConfig& cfg,
                                   const std::vector<AnnotatedSentence>& train,
                                   const std::vector<AnnotatedSentence>& dev);

/// Stage-2 training on gold spans; selects by the best end-to-end dev
/// triplet-F1 through the given stage-1 model.
TrainedMatching train_matching(const RunConfig& cfg, const ExtractionModel& extraction,
                               const Vocabulary& vocab,
                               const std::vector<AnnotatedSentence>& train,
                               const std::vector<AnnotatedSentence>& dev);

struct SentencePrediction {
  std::vector<std::string> tokens;
  bool skipped = false;  // sentence did not fit under max_len
  std::vector<Triplet> triplets;
  std::vector<double> probabilities;  // aligned with triplets
};

/// Full two-stage pipeline on one sentence: stage-1 spans, perceivable
/// pairs, stage-2 classification, triplet assembly.
SentencePrediction predict_sentence(const ExtractionModel& extraction,
                                    const MatchingModel& matching, const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens,
                                    AblationMode mode = AblationMode::None);

std::vector<SentencePrediction> predict_corpus(const ExtractionModel& extraction,
                                               const MatchingModel& matching,
                                               const Vocabulary& vocab,
                                               const std::vector<AnnotatedSentence>& sentences,
                                               AblationMode mode = AblationMode::None);

/// End-to-end exact-match scoring of the pipeline over a split.
EvalReport evaluate_pipeline(const ExtractionModel& extraction, const MatchingModel& matching,
                             const Vocabulary& vocab,
                             const std::vector<AnnotatedSentence>& sentences,
                             AblationMode mode = AblationMode::None,
                             std::vector<std::vector<Triplet>>* predictions_out = nullptr);

/// Distinct deterministic seed streams for model init and training.
std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace aste
