#pragma once

#include <string>
#include <vector>

#include "aste/corpus.hpp"
#include "aste/extraction.hpp"

namespace aste {

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long predicted = 0;
  long gold = 0;
};

EvalReport make_report(long tp, long predicted, long gold);

/// Exact-match micro scoring: a predicted triplet is a true positive iff
/// target span, opinion span, and polarity all equal a gold triplet.
/// Duplicated predictions are deduplicated first. Lists must align by
/// sentence.
EvalReport score(const std::vector<std::vector<Triplet>>& predictions,
                 const std::vector<std::vector<Triplet>>& gold);

/// Typed span micro-F1 (targets and opinions pooled), used for stage-1
/// model selection.
EvalReport score_spans(const std::vector<SpanSets>& predictions,
                       const std::vector<SpanSets>& gold);

struct BucketReport {
  std::string label;  // "1", "2", "3", ">=4", ...
  long sentences = 0;
  EvalReport report;
};

/// Sentences bucketed by gold triplet count. `boundaries` lists the exact
/// counts given their own bucket; everything at or past the last boundary
/// shares a ">=" bucket. Sentences with zero gold triplets get a "0" bucket
/// when present so bucket gold counts always sum to the global total.
std::vector<BucketReport> breakdown_by_triplet_count(
    const std::vector<std::vector<Triplet>>& predictions,
    const std::vector<std::vector<Triplet>>& gold, const std::vector<int>& boundaries = {1, 2, 3,
                                                                                         4});

/// Indices of sentences where some target or opinion span occurs in at
/// least two gold triplets.
std::vector<std::size_t> one_to_many_indices(const std::vector<std::vector<Triplet>>& gold);

std::vector<AnnotatedSentence> one_to_many_subset(const std::vector<AnnotatedSentence>& corpus);

}  // namespace aste
