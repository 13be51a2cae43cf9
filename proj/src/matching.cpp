#include "aste/matching.hpp"

namespace aste {

using nn::Var;

const char* match_label_name(MatchLabel m) {
  switch (m) {
    case MatchLabel::POS: return "POS";
    case MatchLabel::NEU: return "NEU";
    case MatchLabel::NEG: return "NEG";
    case MatchLabel::O: return "O";
  }
  fail("invalid match label");
}

MatchLabel match_label_of(Polarity p) { return static_cast<MatchLabel>(static_cast<int>(p)); }

MatchLabel argmax_label(const std::vector<double>& distribution) {
  check(distribution.size() == kMatchLabelCount, "argmax_label: need ", kMatchLabelCount,
        " probabilities");
  int best = 0;
  for (int i = 1; i < kMatchLabelCount; ++i)
    if (distribution[static_cast<std::size_t>(i)] > distribution[static_cast<std::size_t>(best)])
      best = i;
  return static_cast<MatchLabel>(best);
}

std::vector<MatchLabel> gold_grid(const SpanSets& spans,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  const std::vector<Triplet>& gold) {
  std::vector<MatchLabel> grid;
  grid.reserve(pairs.size());
  for (const auto& [ti, oi] : pairs) {
    const Span& target = spans.targets[static_cast<std::size_t>(ti)];
    const Span& opinion = spans.opinions[static_cast<std::size_t>(oi)];
    MatchLabel label = MatchLabel::O;
    for (const Triplet& t : gold) {
      if (t.target == target && t.opinion == opinion) {
        label = match_label_of(t.polarity);
        break;
      }
    }
    grid.push_back(label);
  }
  return grid;
}

MatchingModel::MatchingModel(const EncoderConfig& cfg, std::uint64_t init_seed) {
  Rng rng(init_seed);
  encoder_ = std::make_unique<Encoder>(cfg, params_, rng, "enc");
  Array wm = Array::zeros({2 * cfg.hidden, kMatchLabelCount});
  for (std::size_t i = 0; i < wm.size(); ++i) wm[i] = rng.normal(0.0, 0.02);
  wm_ = &params_.add("head.wm", std::move(wm));
  bm_ = &params_.add("head.bm", Array::zeros({kMatchLabelCount}));
}

EncoderOutput MatchingModel::encode_compound(const CompoundInput& compound, bool keep_attention,
                                             bool train, Rng* dropout_rng) const {
  Var embedded =
      encoder_->embed(compound.token_ids, compound.position_ids, compound.segment_ids);
  return encoder_->encode(embedded, compound.mask, keep_attention, train, dropout_rng);
}

Var MatchingModel::pair_representation(const EncoderOutput& output,
                                       const PerceivablePair& pair) const {
  const int seq = output.hidden.rows();
  check(pair.fuse_target >= 0 && pair.fuse_target < seq && pair.fuse_opinion >= 0 &&
            pair.fuse_opinion < seq,
        "pair_representation: fusion slot out of range");
  Var t = nn::gather_rows(output.hidden, {pair.fuse_target});
  Var o = nn::gather_rows(output.hidden, {pair.fuse_opinion});
  return nn::concat_cols(t, o);
}

Var MatchingModel::match_distribution(const Var& pair_rep) const {
  check(pair_rep.cols() == 2 * encoder_->config().hidden, "match_distribution: expected width ",
        2 * encoder_->config().hidden);
  return nn::softmax_rows(nn::add_bias(nn::matmul(pair_rep, nn::leaf(*wm_)), nn::leaf(*bm_)));
}

Var MatchingModel::loss(const std::vector<CompoundInput>& chunks,
                        const std::vector<MatchLabel>& grid, bool train, Rng* dropout_rng) const {
  std::vector<Var> terms;
  std::size_t flat = 0;
  for (const CompoundInput& chunk : chunks) {
    if (chunk.pairs.empty()) continue;
    EncoderOutput out = encode_compound(chunk, false, train, dropout_rng);
    for (const PerceivablePair& pair : chunk.pairs) {
      check(flat < grid.size(), "matching loss: grid smaller than pair table");
      Var dist = match_distribution(pair_representation(out, pair));
      Array onehot = Array::zeros({kMatchLabelCount});
      onehot[static_cast<std::size_t>(grid[flat])] = 1.0;
      terms.push_back(nn::cross_entropy(dist, onehot));
      ++flat;
    }
  }
  check(flat == grid.size(), "matching loss: grid larger than pair table");
  check(!terms.empty(), "matching loss: no pairs");
  return nn::add_scalars(terms);
}

std::vector<PairPrediction> MatchingModel::predict_pairs(
    const std::vector<CompoundInput>& chunks) const {
  std::vector<PairPrediction> out;
  for (const CompoundInput& chunk : chunks) {
    if (chunk.pairs.empty()) continue;
    EncoderOutput enc = encode_compound(chunk);
    for (const PerceivablePair& pair : chunk.pairs) {
      Var dist = match_distribution(pair_representation(enc, pair));
      PairPrediction pred;
      pred.target_index = pair.target_index;
      pred.opinion_index = pair.opinion_index;
      for (int j = 0; j < kMatchLabelCount; ++j) pred.distribution.push_back(dist.value().at(0, j));
      pred.label = argmax_label(pred.distribution);
      out.push_back(std::move(pred));
    }
  }
  return out;
}

std::vector<Triplet> assemble_triplets(const std::vector<PairPrediction>& predictions,
                                       const SpanSets& spans) {
  std::vector<Triplet> out;
  for (const PairPrediction& p : predictions) {
    if (p.label == MatchLabel::O) continue;
    check(p.target_index >= 0 && p.target_index < static_cast<int>(spans.targets.size()) &&
              p.opinion_index >= 0 && p.opinion_index < static_cast<int>(spans.opinions.size()),
          "assemble_triplets: pair index out of range");
    out.push_back(Triplet{spans.targets[static_cast<std::size_t>(p.target_index)],
                          spans.opinions[static_cast<std::size_t>(p.opinion_index)],
                          static_cast<Polarity>(static_cast<int>(p.label))});
  }
  return out;
}

}  // namespace aste
