#pragma once

#include <string>
#include <utility>
#include <vector>

#include "aste/corpus.hpp"
#include "aste/extraction.hpp"

namespace aste {

/// Ablation switches for the stage-2 input structure:
///   A  drop the start markers (pairs carry only T-E/O-E, fusion uses them)
///   B  drop the end markers (only T-B/O-B)
///   C  drop the marker segment entirely; fusion falls back to the sentence
///      representation at each span's first word
///   D  single segment id for the whole sequence
///   E  marker rows additionally see every other pair's markers
///   F  no attention restriction at all
enum class AblationMode { None, A, B, C, D, E, F };

const char* ablation_name(AblationMode m);
AblationMode ablation_from(const std::string& name);

/// One target-opinion combination and where its marker tokens sit in the
/// compound sequence. Slot value -1 means the marker was ablated away.
struct PerceivablePair {
  int target_index = 0;   // 0-based into SpanSets.targets
  int opinion_index = 0;  // 0-based into SpanSets.opinions
  int tb = -1, te = -1, ob = -1, oe = -1;

  // Compound positions whose hidden states the matching head concatenates.
  int fuse_target = -1;
  int fuse_opinion = -1;

  std::vector<int> slots() const {
    std::vector<int> s;
    for (int v : {tb, te, ob, oe})
      if (v >= 0) s.push_back(v);
    return s;
  }
};

/// Everything one encoder pass needs for a chunk of pairs:
/// [CLS] X [SEP] X_ts [SEP], shared position ids, segment ids, and the
/// restricted attention mask.
struct CompoundInput {
  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> segment_ids;
  BoolMatrix mask;
  int sentence_len = 0;
  std::vector<PerceivablePair> pairs;
  /// compound position -> original word index; markers map to the boundary
  /// word whose position they share, specials to -1.
  std::vector<int> word_of;
  AblationMode mode = AblationMode::None;

  int length() const { return static_cast<int>(token_ids.size()); }
  bool has_marker_segment() const;
};

/// All m·n (target, opinion) combinations in row-major order.
std::vector<std::pair<int, int>> build_pairs(const SpanSets& spans);

/// Builds the compound sequence(s) for the sentence. Pairs that do not fit
/// under max_len spill into further self-contained chunks (greedy packing
/// in pair order). Throws when even the bare sentence does not fit.
std::vector<CompoundInput> build_compound(const std::vector<int>& word_ids, const SpanSets& spans,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          int max_len, AblationMode mode = AblationMode::None);

/// The restricted attention field: sentence rows see [CLS] X [SEP]; marker
/// rows additionally see their own pair's slots; the trailing [SEP] sees the
/// sentence plus itself.
BoolMatrix build_attention_field(const CompoundInput& compound);

}  // namespace aste
