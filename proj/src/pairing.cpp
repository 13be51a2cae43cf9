#include "aste/pairing.hpp"

#include <algorithm>

namespace aste {

const char* ablation_name(AblationMode m) {
  switch (m) {
    case AblationMode::None: return "none";
    case AblationMode::A: return "a";
    case AblationMode::B: return "b";
    case AblationMode::C: return "c";
    case AblationMode::D: return "d";
    case AblationMode::E: return "e";
    case AblationMode::F: return "f";
  }
  fail("invalid ablation mode");
}

AblationMode ablation_from(const std::string& name) {
  if (name == "none" || name.empty()) return AblationMode::None;
  if (name == "a") return AblationMode::A;
  if (name == "b") return AblationMode::B;
  if (name == "c") return AblationMode::C;
  if (name == "d") return AblationMode::D;
  if (name == "e") return AblationMode::E;
  if (name == "f") return AblationMode::F;
  fail("unknown ablation mode '", name, "' (expected one of a..f)");
}

bool CompoundInput::has_marker_segment() const {
  return mode != AblationMode::C && !pairs.empty();
}

std::vector<std::pair<int, int>> build_pairs(const SpanSets& spans) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < spans.targets.size(); ++i)
    for (std::size_t j = 0; j < spans.opinions.size(); ++j)
      out.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return out;
}

namespace {

int slots_per_pair(AblationMode mode) {
  switch (mode) {
    case AblationMode::A:
    case AblationMode::B: return 2;
    case AblationMode::C: return 0;
    default: return 4;
  }
}

}  // namespace

std::vector<CompoundInput> build_compound(const std::vector<int>& word_ids, const SpanSets& spans,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          int max_len, AblationMode mode) {
  const int l = static_cast<int>(word_ids.size());
  check(l > 0, "build_compound: empty sentence");
  check(l + 2 <= max_len, "sentence of ", l, " words exceeds max length ", max_len);
  for (const auto& [ti, oi] : pairs) {
    check(ti >= 0 && ti < static_cast<int>(spans.targets.size()), "pair target index out of range");
    check(oi >= 0 && oi < static_cast<int>(spans.opinions.size()), "pair opinion index out of range");
  }

  const int spp = slots_per_pair(mode);
  // Base is [CLS] X [SEP] plus the trailing [SEP] that closes the marker
  // segment (absent when there is no marker segment).
  const int base = l + 2 + (spp > 0 ? 1 : 0);
  int per_chunk = static_cast<int>(pairs.size());
  if (spp > 0 && !pairs.empty()) {
    per_chunk = (max_len - base) / spp;
    check(per_chunk >= 1, "no room for a pair: sentence of ", l, " words under max length ",
          max_len);
  }

  std::vector<CompoundInput> chunks;
  std::size_t next = 0;
  do {
    const std::size_t take =
        pairs.empty() ? 0 : std::min<std::size_t>(static_cast<std::size_t>(per_chunk), pairs.size() - next);

    CompoundInput c;
    c.mode = mode;
    c.sentence_len = l;
    c.token_ids.push_back(Vocabulary::kCls);
    c.position_ids.push_back(0);
    c.word_of.push_back(-1);
    for (int w = 0; w < l; ++w) {
      c.token_ids.push_back(word_ids[static_cast<std::size_t>(w)]);
      c.position_ids.push_back(w + 1);
      c.word_of.push_back(w);
    }
    c.token_ids.push_back(Vocabulary::kSep);
    c.position_ids.push_back(l + 1);
    c.word_of.push_back(-1);
    c.segment_ids.assign(static_cast<std::size_t>(l + 2), 0);

    auto push_marker = [&](int token, int word_index) {
      const int slot = static_cast<int>(c.token_ids.size());
      c.token_ids.push_back(token);
      // The marker reuses the position id of
      // the boundary word of its span.
      c.position_ids.push_back(word_index + 1);
      c.segment_ids.push_back(1);
      c.word_of.push_back(word_index);
      return slot;
    };

    for (std::size_t p = next; p < next + take; ++p) {
      const auto& [ti, oi] = pairs[p];
      const Span& target = spans.targets[static_cast<std::size_t>(ti)];
      const Span& opinion = spans.opinions[static_cast<std::size_t>(oi)];
      PerceivablePair pp;
      pp.target_index = ti;
      pp.opinion_index = oi;
      if (mode != AblationMode::A && mode != AblationMode::C)
        pp.tb = push_marker(Vocabulary::kTargetBegin, target.start);
      if (mode != AblationMode::B && mode != AblationMode::C)
        pp.te = push_marker(Vocabulary::kTargetEnd, target.end);
      if (mode != AblationMode::A && mode != AblationMode::C)
        pp.ob = push_marker(Vocabulary::kOpinionBegin, opinion.start);
      if (mode != AblationMode::B && mode != AblationMode::C)
        pp.oe = push_marker(Vocabulary::kOpinionEnd, opinion.end);

      switch (mode) {
        case AblationMode::A:
          pp.fuse_target = pp.te;
          pp.fuse_opinion = pp.oe;
          break;
        case AblationMode::C:
          pp.fuse_target = 1 + target.start;
          pp.fuse_opinion = 1 + opinion.start;
          break;
        default:
          pp.fuse_target = pp.tb;
          pp.fuse_opinion = pp.ob;
          break;
      }
      c.pairs.push_back(pp);
    }

    if (spp > 0 && take > 0) {
      // Trailing delimiter closing the marker segment; it shares the first
      // [SEP]'s position id and stays in segment 1.
      c.token_ids.push_back(Vocabulary::kSep);
      c.position_ids.push_back(l + 1);
      c.segment_ids.push_back(1);
      c.word_of.push_back(-1);
    }

    if (mode == AblationMode::D)
      std::fill(c.segment_ids.begin(), c.segment_ids.end(), 0);

    c.mask = build_attention_field(c);
    chunks.push_back(std::move(c));
    next += take;
  } while (next < pairs.size());

  return chunks;
}

BoolMatrix build_attention_field(const CompoundInput& compound) {
  const int len = compound.length();
  const int sentence_block = compound.sentence_len + 2;  // [CLS] X [SEP]

  if (compound.mode == AblationMode::F) return BoolMatrix(len, len, true);

  BoolMatrix mask(len, len, false);
  auto allow_sentence = [&](int row) {
    for (int col = 0; col < sentence_block; ++col) mask.set(row, col, true);
  };

  for (int row = 0; row < sentence_block; ++row) allow_sentence(row);

  std::vector<int> all_slots;
  for (const PerceivablePair& p : compound.pairs)
    for (int s : p.slots()) all_slots.push_back(s);

  for (const PerceivablePair& p : compound.pairs) {
    for (int row : p.slots()) {
      allow_sentence(row);
      if (compound.mode == AblationMode::E) {
        for (int col : all_slots) mask.set(row, col, true);
      } else {
        for (int col : p.slots()) mask.set(row, col, true);
      }
    }
  }

  if (len > sentence_block && !all_slots.empty()) {
    const int trailing = len - 1;
    allow_sentence(trailing);
    mask.set(trailing, trailing, true);
  }
  return mask;
}

}  // namespace aste
