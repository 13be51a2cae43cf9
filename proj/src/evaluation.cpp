#include "aste/evaluation.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace aste {

EvalReport make_report(long tp, long predicted, long gold) {
  EvalReport r;
  r.tp = tp;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
  r.recall = gold > 0 ? static_cast<double>(tp) / gold : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

EvalReport score(const std::vector<std::vector<Triplet>>& predictions,
                 const std::vector<std::vector<Triplet>>& gold) {
  check(predictions.size() == gold.size(), "score: ", predictions.size(), " prediction lists vs ",
        gold.size(), " gold lists");
  long tp = 0, npred = 0, ngold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<Triplet> pred(predictions[i].begin(), predictions[i].end());
    const std::set<Triplet> gset(gold[i].begin(), gold[i].end());
    npred += static_cast<long>(pred.size());
    ngold += static_cast<long>(gset.size());
    for (const Triplet& t : pred)
      if (gset.count(t)) ++tp;
  }
  return make_report(tp, npred, ngold);
}

namespace {

// Typed span: false = target, true = opinion.
using TypedSpan = std::pair<bool, Span>;

std::set<TypedSpan> typed_spans(const SpanSets& s) {
  std::set<TypedSpan> out;
  for (const Span& sp : s.targets) out.insert({false, sp});
  for (const Span& sp : s.opinions) out.insert({true, sp});
  return out;
}

}  // namespace

EvalReport score_spans(const std::vector<SpanSets>& predictions,
                       const std::vector<SpanSets>& gold) {
  check(predictions.size() == gold.size(), "score_spans: misaligned lists");
  long tp = 0, npred = 0, ngold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto pset = typed_spans(predictions[i]);
    const auto gset = typed_spans(gold[i]);
    npred += static_cast<long>(pset.size());
    ngold += static_cast<long>(gset.size());
    for (const auto& sp : pset)
      if (gset.count(sp)) ++tp;
  }
  return make_report(tp, npred, ngold);
}

std::vector<BucketReport> breakdown_by_triplet_count(
    const std::vector<std::vector<Triplet>>& predictions,
    const std::vector<std::vector<Triplet>>& gold, const std::vector<int>& boundaries) {
  check(predictions.size() == gold.size(), "breakdown: misaligned lists");
  check(!boundaries.empty(), "breakdown: no bucket boundaries");
  check(std::is_sorted(boundaries.begin(), boundaries.end()), "breakdown: boundaries must ascend");

  // Boundaries are bucket lower bounds: bucket b covers
  // [boundaries[b], boundaries[b+1]) and the last one is open-ended, so the
  // buckets always partition the corpus. Zero-triplet sentences get their
  // own "0" bucket when present.
  auto bucket_of = [&](int count) -> int {
    if (count < boundaries.front()) return -1;
    int b = 0;
    while (b + 1 < static_cast<int>(boundaries.size()) &&
           count >= boundaries[static_cast<std::size_t>(b + 1)])
      ++b;
    return b;
  };
  auto label_of = [&](int b) -> std::string {
    if (b < 0) return "0";
    const int lo = boundaries[static_cast<std::size_t>(b)];
    if (b + 1 == static_cast<int>(boundaries.size())) return ">=" + std::to_string(lo);
    const int hi = boundaries[static_cast<std::size_t>(b + 1)] - 1;
    return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
  };

  std::map<int, std::vector<std::size_t>> by_bucket;
  for (std::size_t i = 0; i < gold.size(); ++i)
    by_bucket[bucket_of(static_cast<int>(gold[i].size()))].push_back(i);

  std::vector<BucketReport> out;
  for (const auto& [bucket, indices] : by_bucket) {
    std::vector<std::vector<Triplet>> p, g;
    for (std::size_t i : indices) {
      p.push_back(predictions[i]);
      g.push_back(gold[i]);
    }
    BucketReport br;
    br.label = label_of(bucket);
    br.sentences = static_cast<long>(p.size());
    br.report = score(p, g);
    out.push_back(std::move(br));
  }
  return out;
}

std::vector<std::size_t> one_to_many_indices(const std::vector<std::vector<Triplet>>& gold) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::map<Span, int> target_uses, opinion_uses;
    for (const Triplet& t : gold[i]) {
      ++target_uses[t.target];
      ++opinion_uses[t.opinion];
    }
    bool shared = false;
    for (const auto& [sp, n] : target_uses)
      if (n >= 2) shared = true;
    for (const auto& [sp, n] : opinion_uses)
      if (n >= 2) shared = true;
    if (shared) kept.push_back(i);
  }
  return kept;
}

std::vector<AnnotatedSentence> one_to_many_subset(const std::vector<AnnotatedSentence>& corpus) {
  std::vector<std::vector<Triplet>> gold;
  gold.reserve(corpus.size());
  for (const auto& s : corpus) gold.push_back(s.triplets);
  std::vector<AnnotatedSentence> out;
  for (std::size_t i : one_to_many_indices(gold)) out.push_back(corpus[i]);
  return out;
}

}  // namespace aste
