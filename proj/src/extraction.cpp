#include "aste/extraction.hpp"

#include <algorithm>

namespace aste {

using nn::Var;

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::O: return "O";
    case Tag::TargetBegin: return "B-T";
    case Tag::TargetInside: return "I-T";
    case Tag::TargetEnd: return "E-T";
    case Tag::TargetSingle: return "S-T";
    case Tag::OpinionBegin: return "B-O";
    case Tag::OpinionInside: return "I-O";
    case Tag::OpinionEnd: return "E-O";
    case Tag::OpinionSingle: return "S-O";
  }
  fail("invalid tag value");
}

std::vector<Tag> encode_spans(const SpanSets& spans, int length) {
  std::vector<Tag> labels(static_cast<std::size_t>(length), Tag::O);
  auto place = [&](const Span& sp, Tag single, Tag begin, Tag inside, Tag end) {
    check(sp.start >= 0 && sp.end >= sp.start && sp.end < length, "encode_spans: span ",
          sp.start, "..", sp.end, " out of range for length ", length);
    for (int i = sp.start; i <= sp.end; ++i)
      check(labels[static_cast<std::size_t>(i)] == Tag::O, "encode_spans: overlapping spans at word ", i);
    if (sp.start == sp.end) {
      labels[static_cast<std::size_t>(sp.start)] = single;
      return;
    }
    labels[static_cast<std::size_t>(sp.start)] = begin;
    for (int i = sp.start + 1; i < sp.end; ++i) labels[static_cast<std::size_t>(i)] = inside;
    labels[static_cast<std::size_t>(sp.end)] = end;
  };
  for (const Span& sp : spans.targets)
    place(sp, Tag::TargetSingle, Tag::TargetBegin, Tag::TargetInside, Tag::TargetEnd);
  for (const Span& sp : spans.opinions)
    place(sp, Tag::OpinionSingle, Tag::OpinionBegin, Tag::OpinionInside, Tag::OpinionEnd);
  return labels;
}

SpanSets decode_spans(const std::vector<Tag>& labels) {
  SpanSets out;
  const int n = static_cast<int>(labels.size());
  int i = 0;
  while (i < n) {
    const Tag t = labels[static_cast<std::size_t>(i)];
    if (t == Tag::TargetSingle) {
      out.targets.push_back({i, i});
      ++i;
    } else if (t == Tag::OpinionSingle) {
      out.opinions.push_back({i, i});
      ++i;
    } else if (t == Tag::TargetBegin || t == Tag::OpinionBegin) {
      const bool target = t == Tag::TargetBegin;
      const Tag inside = target ? Tag::TargetInside : Tag::OpinionInside;
      const Tag end = target ? Tag::TargetEnd : Tag::OpinionEnd;
      int j = i + 1;
      while (j < n && labels[static_cast<std::size_t>(j)] == inside) ++j;
      if (j < n && labels[static_cast<std::size_t>(j)] == end) {
        (target ? out.targets : out.opinions).push_back({i, j});
        i = j + 1;
      } else {
        ++i;  // B without a matching E: drop the fragment
      }
    } else {
      ++i;  // O or orphan I/E
    }
  }
  return out;
}

SpanSets gold_spans(const AnnotatedSentence& sentence) {
  SpanSets out;
  auto collect = [](std::vector<Span>& dst, const Span& sp) {
    if (std::find(dst.begin(), dst.end(), sp) == dst.end()) dst.push_back(sp);
  };
  for (const Triplet& t : sentence.triplets) {
    collect(out.targets, t.target);
    collect(out.opinions, t.opinion);
  }
  std::sort(out.targets.begin(), out.targets.end());
  std::sort(out.opinions.begin(), out.opinions.end());
  return out;
}

ExtractionModel::ExtractionModel(const EncoderConfig& cfg, std::uint64_t init_seed) {
  Rng rng(init_seed);
  encoder_ = std::make_unique<Encoder>(cfg, params_, rng, "enc");
  Array we = Array::zeros({cfg.hidden, kTagCount});
  for (std::size_t i = 0; i < we.size(); ++i) we[i] = rng.normal(0.0, 0.02);
  we_ = &params_.add("head.we", std::move(we));
  be_ = &params_.add("head.be", Array::zeros({kTagCount}));
}

Var ExtractionModel::tag_distributions(const std::vector<int>& word_ids, bool train,
                                       Rng* dropout_rng) const {
  const int l = static_cast<int>(word_ids.size());
  check(l > 0, "tag_distributions: empty sentence");
  check(l + 2 <= encoder_->config().max_len, "sentence of ", l, " words exceeds max length ",
        encoder_->config().max_len);

  std::vector<int> tokens, positions, segments;
  tokens.push_back(Vocabulary::kCls);
  for (int id : word_ids) tokens.push_back(id);
  tokens.push_back(Vocabulary::kSep);
  for (int p = 0; p < l + 2; ++p) {
    positions.push_back(p);
    segments.push_back(0);
  }

  BoolMatrix mask(l + 2, l + 2, true);
  Var embedded = encoder_->embed(tokens, positions, segments);
  EncoderOutput enc = encoder_->encode(embedded, mask, false, train, dropout_rng);

  std::vector<int> word_rows;
  for (int i = 1; i <= l; ++i) word_rows.push_back(i);
  Var reps = nn::gather_rows(enc.hidden, word_rows);
  return tag_distributions_from(reps);
}

Var ExtractionModel::tag_distributions_from(const Var& reps) const {
  return nn::softmax_rows(nn::add_bias(nn::matmul(reps, nn::leaf(*we_)), nn::leaf(*be_)));
}

Var ExtractionModel::loss(const Var& dists, const std::vector<Tag>& gold) const {
  check(dists.rows() == static_cast<int>(gold.size()), "extraction loss: ", gold.size(),
        " labels for ", dists.rows(), " rows");
  std::vector<int> gold_ids;
  gold_ids.reserve(gold.size());
  for (Tag t : gold) gold_ids.push_back(static_cast<int>(t));
  return nn::cross_entropy_rows(dists, gold_ids);
}

SpanSets ExtractionModel::predict_spans(const std::vector<int>& word_ids) const {
  Var dists = tag_distributions(word_ids);
  std::vector<Tag> labels;
  for (int i = 0; i < dists.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < kTagCount; ++j)
      if (dists.value().at(i, j) > dists.value().at(i, best)) best = j;
    labels.push_back(static_cast<Tag>(best));
  }
  return decode_spans(labels);
}

}  // namespace aste
