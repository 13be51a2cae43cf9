#pragma once

#include <cstdint>
#include <vector>

#include "aste/encoder.hpp"
#include "aste/pairing.hpp"

namespace aste {

/// Four-way matching outcome; O means the pair does not form a triplet.
enum class MatchLabel : int { POS = 0, NEU = 1, NEG = 2, O = 3 };
constexpr int kMatchLabelCount = 4;

const char* match_label_name(MatchLabel m);
MatchLabel match_label_of(Polarity p);

struct PairPrediction {
  int target_index = 0;
  int opinion_index = 0;
  std::vector<double> distribution;  // over {POS, NEU, NEG, O}
  MatchLabel label = MatchLabel::O;

  double probability() const { return distribution[static_cast<std::size_t>(label)]; }
};

/// Ties break toward the earlier label in the fixed order POS, NEU, NEG, O.
MatchLabel argmax_label(const std::vector<double>& distribution);

/// Per-pair gold labels for the m×n grid: a pair gets the triplet's
/// polarity when a gold triplet has exactly its spans, otherwise O.
std::vector<MatchLabel> gold_grid(const SpanSets& spans,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  const std::vector<Triplet>& gold);

/// Stage-2 model: encoder over the compound sequence plus the 4-way pair
/// classification head on fused marker states.
class MatchingModel {
 public:
  MatchingModel(const EncoderConfig& cfg, std::uint64_t init_seed);

  EncoderOutput encode_compound(const CompoundInput& compound, bool keep_attention = false,
                                bool train = false, Rng* dropout_rng = nullptr) const;

  /// [h_at_fuse_target ; h_at_fuse_opinion], a 1×2d row.
  nn::Var pair_representation(const EncoderOutput& output, const PerceivablePair& pair) const;

  /// 4-way distribution for one fused pair representation.
  nn::Var match_distribution(const nn::Var& pair_rep) const;

  /// Summed cross-entropy over all pairs of the chunks against the grid
  /// labels (indexed like `pairs`: row-major over the full grid).
  nn::Var loss(const std::vector<CompoundInput>& chunks, const std::vector<MatchLabel>& grid,
               bool train = false, Rng* dropout_rng = nullptr) const;

  /// Predictions for every pair of every chunk, in pair order.
  std::vector<PairPrediction> predict_pairs(const std::vector<CompoundInput>& chunks) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const Encoder& encoder() const { return *encoder_; }
  const EncoderConfig& config() const { return encoder_->config(); }

 private:
  nn::ParamStore params_;
  std::unique_ptr<Encoder> encoder_;
  nn::Parameter *wm_, *bm_;
};

/// Every non-O prediction becomes a triplet over the pair's spans.
std::vector<Triplet> assemble_triplets(const std::vector<PairPrediction>& predictions,
                                       const SpanSets& spans);

}  // namespace aste
