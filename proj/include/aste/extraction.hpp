#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aste/corpus.hpp"
#include "aste/encoder.hpp"

namespace aste {

/// The 9 BIOES labels: B/I/E/S for targets and opinions plus unmarked O.
enum class Tag : int {
  O = 0,
  TargetBegin,
  TargetInside,
  TargetEnd,
  TargetSingle,
  OpinionBegin,
  OpinionInside,
  OpinionEnd,
  OpinionSingle,
};
constexpr int kTagCount = 9;

const char* tag_name(Tag t);

struct SpanSets {
  std::vector<Span> targets;
  std::vector<Span> opinions;

  bool operator==(const SpanSets& o) const {
    return targets == o.targets && opinions == o.opinions;
  }
};

/// Gold label sequence for the spans: single-word spans become S-*, longer
/// ones B-* I-*... E-*. Throws if any two spans overlap.
std::vector<Tag> encode_spans(const SpanSets& spans, int length);

/// Inverse of encode_spans, total on arbitrary label sequences. Only
/// well-formed runs (S, or B..E with matching I between) become spans;
/// orphan fragments are dropped.
SpanSets decode_spans(const std::vector<Tag>& labels);

SpanSets gold_spans(const AnnotatedSentence& sentence);

/// Stage-1 model: encoder over [CLS] w1..wl [SEP] plus a 9-way token
/// classification head over the word positions.
class ExtractionModel {
 public:
  ExtractionModel(const EncoderConfig& cfg, std::uint64_t init_seed);

  /// Per-word distributions over the 9 labels, rows summing to 1.
  nn::Var tag_distributions(const std::vector<int>& word_ids, bool train = false,
                            Rng* dropout_rng = nullptr) const;

  /// Head applied to precomputed representations (one row per word).
  nn::Var tag_distributions_from(const nn::Var& reps) const;

  /// Summed cross-entropy over the word positions.
  nn::Var loss(const nn::Var& dists, const std::vector<Tag>& gold) const;

  SpanSets predict_spans(const std::vector<int>& word_ids) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const Encoder& encoder() const { return *encoder_; }
  const EncoderConfig& config() const { return encoder_->config(); }

 private:
  nn::ParamStore params_;
  std::unique_ptr<Encoder> encoder_;
  nn::Parameter *we_, *be_;
};

}  // namespace aste
