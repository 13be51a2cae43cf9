#include "aste/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace aste {

using nn::Var;

std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

struct Snapshot {
  std::vector<Array> values;

  static Snapshot take(const nn::ParamStore& params) {
    Snapshot s;
    for (const auto& p : params.all()) s.values.push_back(p->value);
    return s;
  }

  void restore(nn::ParamStore& params) const {
    const auto& all = params.all();
    check(all.size() == values.size(), "snapshot size mismatch");
    for (std::size_t i = 0; i < all.size(); ++i) {
      all[i]->value = values[i];
      all[i]->zero_grad();
    }
  }
};

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  return order;
}

}  // namespace

TrainedExtraction train_extraction(const RunConfig& cfg,
                                   const std::vector<AnnotatedSentence>& train,
                                   const std::vector<AnnotatedSentence>& dev) {
  check(!train.empty(), "train_extraction: empty training split");
  check(cfg.batch_size >= 1, "train_extraction: batch size must be >= 1");

  TrainedExtraction out;
  out.vocab = build_vocab(train, cfg.min_freq);
  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.vocab = out.vocab.size();
  out.model = std::make_unique<ExtractionModel>(enc_cfg, seed_stream(cfg.seed, 1));
  out.meta.seed = cfg.seed;
  out.meta.ablation = cfg.ablation;

  struct Example {
    std::vector<int> ids;
    std::vector<Tag> tags;
  };
  std::vector<Example> examples;
  for (const auto& s : train) {
    Example e;
    e.ids = encode_tokens(s, out.vocab);
    e.tags = encode_spans(gold_spans(s), static_cast<int>(s.tokens.size()));
    examples.push_back(std::move(e));
  }

  std::vector<SpanSets> dev_gold;
  for (const auto& s : dev) dev_gold.push_back(gold_spans(s));

  auto dev_span_f1 = [&]() {
    if (dev.empty()) return 0.0;
    std::vector<SpanSets> pred;
    for (const auto& s : dev) pred.push_back(out.model->predict_spans(encode_tokens(s, out.vocab)));
    return score_spans(pred, dev_gold).f1;
  };

  Rng train_rng(seed_stream(cfg.seed, 2));
  nn::Adam adam(out.model->params(), {cfg.lr});
  Snapshot best = Snapshot::take(out.model->params());
  double best_metric = -1.0;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.extract_epochs; ++epoch) {
    const auto order = epoch_order(examples.size(), train_rng);
    double epoch_loss = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - at);
      ++step;
      for (std::size_t b = 0; b < take; ++b) {
        const Example& ex = examples[order[at + b]];
        Var dists = out.model->tag_distributions(ex.ids, true, &train_rng);
        Var loss = out.model->loss(dists, ex.tags);
        check(loss.value().all_finite(), "non-finite extraction loss at step ", step);
        epoch_loss += loss.value()[0];
        nn::backward(loss, 1.0 / static_cast<double>(take));
      }
      adam.step();
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(examples.size());
    log.dev_metric = dev_span_f1();
    out.log.push_back(log);
    // No dev split: keep the final epoch instead of a frozen first metric.
    if (dev.empty() || log.dev_metric > best_metric) {
      best_metric = log.dev_metric;
      best = Snapshot::take(out.model->params());
      out.meta.epoch = epoch;
      out.meta.dev_metric = log.dev_metric;
    }
  }

  if (cfg.extract_epochs > 0) best.restore(out.model->params());
  return out;
}

TrainedMatching train_matching(const RunConfig& cfg, const ExtractionModel& extraction,
                               const Vocabulary& vocab,
                               const std::vector<AnnotatedSentence>& train,
                               const std::vector<AnnotatedSentence>& dev) {
  check(!train.empty(), "train_matching: empty training split");
  check(cfg.batch_size >= 1, "train_matching: batch size must be >= 1");

  TrainedMatching out;
  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.vocab = vocab.size();
  out.model = std::make_unique<MatchingModel>(enc_cfg, seed_stream(cfg.seed, 3));
  out.meta.seed = cfg.seed;
  out.meta.ablation = cfg.ablation;

  // Training pairs come from gold spans; the stage-1 model only defines the
  // dev-time pipeline.
  struct Example {
    std::vector<CompoundInput> chunks;
    std::vector<MatchLabel> grid;
  };
  std::vector<Example> examples;
  for (const auto& s : train) {
    const SpanSets spans = gold_spans(s);
    const auto pairs = build_pairs(spans);
    if (pairs.empty()) continue;
    Example e;
    e.chunks = build_compound(encode_tokens(s, vocab), spans, pairs, enc_cfg.max_len, cfg.ablation);
    e.grid = gold_grid(spans, pairs, s.triplets);
    examples.push_back(std::move(e));
  }
  check(!examples.empty(), "train_matching: no sentence in the training split has any pair");

  std::vector<std::vector<Triplet>> dev_gold;
  for (const auto& s : dev) dev_gold.push_back(s.triplets);

  auto dev_triplet_f1 = [&]() {
    if (dev.empty()) return 0.0;
    return evaluate_pipeline(extraction, *out.model, vocab, dev, cfg.ablation).f1;
  };

  Rng train_rng(seed_stream(cfg.seed, 4));
  nn::Adam adam(out.model->params(), {cfg.lr});
  Snapshot best = Snapshot::take(out.model->params());
  double best_metric = -1.0;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.match_epochs; ++epoch) {
    const auto order = epoch_order(examples.size(), train_rng);
    double epoch_loss = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - at);
      ++step;
      for (std::size_t b = 0; b < take; ++b) {
        const Example& ex = examples[order[at + b]];
        Var loss = out.model->loss(ex.chunks, ex.grid, true, &train_rng);
        check(loss.value().all_finite(), "non-finite matching loss at step ", step);
        epoch_loss += loss.value()[0];
        nn::backward(loss, 1.0 / static_cast<double>(take));
      }
      adam.step();
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(examples.size());
    log.dev_metric = dev_triplet_f1();
    out.log.push_back(log);
    if (dev.empty() || log.dev_metric > best_metric) {
      best_metric = log.dev_metric;
      best = Snapshot::take(out.model->params());
      out.meta.epoch = epoch;
      out.meta.dev_metric = log.dev_metric;
    }
  }

  if (cfg.match_epochs > 0) best.restore(out.model->params());
  return out;
}

SentencePrediction predict_sentence(const ExtractionModel& extraction,
                                    const MatchingModel& matching, const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens, AblationMode mode) {
  SentencePrediction pred;
  pred.tokens = tokens;
  const int l = static_cast<int>(tokens.size());
  if (l == 0 || l + 2 > extraction.config().max_len || l + 2 > matching.config().max_len) {
    pred.skipped = true;
    return pred;
  }

  AnnotatedSentence plain;
  plain.tokens = tokens;
  const std::vector<int> ids = encode_tokens(plain, vocab);
  const SpanSets spans = extraction.predict_spans(ids);
  const auto pairs = build_pairs(spans);
  if (pairs.empty()) return pred;

  std::vector<CompoundInput> chunks;
  try {
    chunks = build_compound(ids, spans, pairs, matching.config().max_len, mode);
  } catch (const Error&) {
    // No room for even one pair under max_len.
    pred.skipped = true;
    return pred;
  }

  const std::vector<PairPrediction> pair_preds = matching.predict_pairs(chunks);
  for (const PairPrediction& pp : pair_preds) {
    if (pp.label == MatchLabel::O) continue;
    pred.triplets.push_back(Triplet{spans.targets[static_cast<std::size_t>(pp.target_index)],
                                    spans.opinions[static_cast<std::size_t>(pp.opinion_index)],
                                    static_cast<Polarity>(static_cast<int>(pp.label))});
    pred.probabilities.push_back(pp.probability());
  }
  return pred;
}

std::vector<SentencePrediction> predict_corpus(const ExtractionModel& extraction,
                                               const MatchingModel& matching,
                                               const Vocabulary& vocab,
                                               const std::vector<AnnotatedSentence>& sentences,
                                               AblationMode mode) {
  std::vector<SentencePrediction> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences)
    out.push_back(predict_sentence(extraction, matching, vocab, s.tokens, mode));
  return out;
}

EvalReport evaluate_pipeline(const ExtractionModel& extraction, const MatchingModel& matching,
                             const Vocabulary& vocab,
                             const std::vector<AnnotatedSentence>& sentences, AblationMode mode,
                             std::vector<std::vector<Triplet>>* predictions_out) {
  std::vector<std::vector<Triplet>> preds, gold;
  for (const auto& s : sentences) {
    preds.push_back(predict_sentence(extraction, matching, vocab, s.tokens, mode).triplets);
    gold.push_back(s.triplets);
  }
  if (predictions_out) *predictions_out = preds;
  return score(preds, gold);
}

}  // namespace aste
