#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aste/adam.hpp"
#include "aste/error.hpp"
#include "aste/gradcheck.hpp"
#include "aste/matching.hpp"

using namespace aste;
using nn::Var;

namespace {

EncoderConfig tiny_config(int vocab, int layers = 1) {
  EncoderConfig cfg;
  cfg.hidden = 16;
  cfg.layers = layers;
  cfg.heads = 2;
  cfg.ffn = 32;
  cfg.max_len = 64;
  cfg.vocab = vocab;
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<int> word_ids(int length) {
  std::vector<int> ids;
  for (int i = 0; i < length; ++i) ids.push_back(Vocabulary::kReservedCount + i);
  return ids;
}

// The running example: "Great food but the service was dreadful !" with
// targets {food, service}, opinions {Great, dreadful}.
struct Example {
  std::vector<int> ids = word_ids(8);
  SpanSets spans;
  std::vector<Triplet> gold;

  Example() {
    spans.targets = {{1, 1}, {4, 4}};
    spans.opinions = {{0, 0}, {6, 6}};
    gold.push_back({{1, 1}, {0, 0}, Polarity::POS});
    gold.push_back({{4, 4}, {6, 6}, Polarity::NEG});
  }
};

}  // namespace

TEST_CASE("pair representation") {
  const EncoderConfig cfg = tiny_config(24);
  MatchingModel model(cfg, 3);
  Example ex;
  const auto pairs = build_pairs(ex.spans);
  const auto chunks = build_compound(ex.ids, ex.spans, pairs, cfg.max_len);
  EncoderOutput out = model.encode_compound(chunks[0]);

  SUBCASE("width is 2d") {
    Var rep = model.pair_representation(out, chunks[0].pairs[0]);
    CHECK(rep.rows() == 1);
    CHECK(rep.cols() == 2 * cfg.hidden);
  }

  SUBCASE("it concatenates the T-B and O-B hidden rows in that order") {
    const PerceivablePair& p = chunks[0].pairs[0];
    Var rep = model.pair_representation(out, p);
    for (int j = 0; j < cfg.hidden; ++j) {
      CHECK(rep.value().at(0, j) == out.hidden.value().at(p.tb, j));
      CHECK(rep.value().at(0, cfg.hidden + j) == out.hidden.value().at(p.ob, j));
    }
  }

  SUBCASE("pairs sharing a target still differ through their opinions") {
    // A_11 and A_12 share target 1; their fused vectors must not coincide.
    Var r1 = model.pair_representation(out, chunks[0].pairs[0]);
    Var r2 = model.pair_representation(out, chunks[0].pairs[1]);
    double diff = 0.0;
    for (int j = 0; j < 2 * cfg.hidden; ++j)
      diff = std::max(diff, std::abs(r1.value().at(0, j) - r2.value().at(0, j)));
    CHECK(diff > 1e-8);
  }

  SUBCASE("slot out of range is rejected") {
    PerceivablePair bogus = chunks[0].pairs[0];
    bogus.fuse_target = chunks[0].length() + 5;
    CHECK_THROWS_AS(model.pair_representation(out, bogus), Error);
  }
}

TEST_CASE("match distribution") {
  const EncoderConfig cfg = tiny_config(24);
  MatchingModel model(cfg, 3);

  SUBCASE("any input yields 4 nonnegative values summing to 1") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      Array rep = Array::zeros({1, 2 * cfg.hidden});
      for (std::size_t i = 0; i < rep.size(); ++i) rep[i] = rng.normal(0.0, 2.0);
      Var dist = model.match_distribution(nn::constant(rep));
      double sum = 0.0;
      for (int j = 0; j < kMatchLabelCount; ++j) {
        CHECK(dist.value().at(0, j) >= 0.0);
        sum += dist.value().at(0, j);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }

  SUBCASE("zero weights and bias give the uniform distribution") {
    model.params().get("head.wm").value.fill(0.0);
    model.params().get("head.bm").value.fill(0.0);
    Array rep = Array::zeros({1, 2 * cfg.hidden});
    rep.fill(0.7);
    Var dist = model.match_distribution(nn::constant(rep));
    for (int j = 0; j < kMatchLabelCount; ++j)
      CHECK(dist.value().at(0, j) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("gold grid") {
  Example ex;
  const auto pairs = build_pairs(ex.spans);

  SUBCASE("non-matching combinations get O") {
    const auto grid = gold_grid(ex.spans, pairs, ex.gold);
    REQUIRE(grid.size() == 4);
    // row-major: (food,Great) (food,dreadful) (service,Great) (service,dreadful)
    CHECK(grid[0] == MatchLabel::POS);
    CHECK(grid[1] == MatchLabel::O);
    CHECK(grid[2] == MatchLabel::O);
    CHECK(grid[3] == MatchLabel::NEG);
  }

  SUBCASE("non-O count equals the number of covered gold triplets") {
    const auto grid = gold_grid(ex.spans, pairs, ex.gold);
    int non_o = 0;
    for (MatchLabel m : grid)
      if (m != MatchLabel::O) ++non_o;
    CHECK(non_o == 2);
  }
}

TEST_CASE("matching loss") {
  const EncoderConfig cfg = tiny_config(24);
  MatchingModel model(cfg, 3);
  Example ex;
  const auto pairs = build_pairs(ex.spans);
  const auto chunks = build_compound(ex.ids, ex.spans, pairs, cfg.max_len);
  const auto grid = gold_grid(ex.spans, pairs, ex.gold);

  SUBCASE("uniform head costs pairs * ln 4") {
    model.params().get("head.wm").value.fill(0.0);
    model.params().get("head.bm").value.fill(0.0);
    Var loss = model.loss(chunks, grid);
    CHECK(loss.value()[0] == doctest::Approx(4.0 * std::log(4.0)).epsilon(1e-9));
    CHECK(loss.value()[0] == doctest::Approx(5.545).epsilon(1e-3));
  }

  SUBCASE("grid size mismatches are rejected") {
    std::vector<MatchLabel> wrong(grid.begin(), grid.end() - 1);
    CHECK_THROWS_AS(model.loss(chunks, wrong), Error);
    std::vector<MatchLabel> too_many = grid;
    too_many.push_back(MatchLabel::O);
    CHECK_THROWS_AS(model.loss(chunks, too_many), Error);
  }

  SUBCASE("perfect predictions cost zero: overfit to check the path end to end") {
    nn::Adam adam(model.params(), {1e-2});
    for (int step = 0; step < 200; ++step) {
      Var loss = model.loss(chunks, grid);
      nn::backward(loss);
      adam.step();
    }
    const auto preds = model.predict_pairs(chunks);
    REQUIRE(preds.size() == 4);
    CHECK(preds[0].label == MatchLabel::POS);
    CHECK(preds[1].label == MatchLabel::O);
    CHECK(preds[2].label == MatchLabel::O);
    CHECK(preds[3].label == MatchLabel::NEG);
    CHECK(model.loss(chunks, grid).value()[0] < 0.1);
  }
}

TEST_CASE("argmax tie-break follows the fixed label order") {
  CHECK(argmax_label({0.25, 0.25, 0.25, 0.25}) == MatchLabel::POS);
  CHECK(argmax_label({0.1, 0.4, 0.4, 0.1}) == MatchLabel::NEU);
  CHECK(argmax_label({0.0, 0.0, 0.0, 1.0}) == MatchLabel::O);
  CHECK_THROWS_AS(argmax_label({0.5, 0.5}), Error);
}

TEST_CASE("assemble_triplets") {
  Example ex;
  const auto pairs = build_pairs(ex.spans);

  auto prediction = [&](int k, MatchLabel label) {
    PairPrediction p;
    p.target_index = pairs[static_cast<std::size_t>(k)].first;
    p.opinion_index = pairs[static_cast<std::size_t>(k)].second;
    p.distribution = {0.1, 0.1, 0.1, 0.7};
    p.distribution[static_cast<std::size_t>(label)] = 0.7;
    p.label = label;
    return p;
  };

  SUBCASE("all O gives the empty set") {
    std::vector<PairPrediction> preds;
    for (int k = 0; k < 4; ++k) preds.push_back(prediction(k, MatchLabel::O));
    CHECK(assemble_triplets(preds, ex.spans).empty());
  }

  SUBCASE("one target with two non-O opinions yields two triplets") {
    std::vector<PairPrediction> preds;
    preds.push_back(prediction(0, MatchLabel::POS));  // (food, Great)
    preds.push_back(prediction(1, MatchLabel::NEG));  // (food, dreadful)
    const auto triplets = assemble_triplets(preds, ex.spans);
    REQUIRE(triplets.size() == 2);
    CHECK(triplets[0].target == triplets[1].target);
    CHECK(!(triplets[0].opinion == triplets[1].opinion));
  }

  SUBCASE("output size equals the non-O count and never exceeds the grid") {
    Rng rng(15);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<PairPrediction> preds;
      int non_o = 0;
      for (int k = 0; k < 4; ++k) {
        const MatchLabel label = static_cast<MatchLabel>(rng.below(4));
        if (label != MatchLabel::O) ++non_o;
        preds.push_back(prediction(k, label));
      }
      const auto triplets = assemble_triplets(preds, ex.spans);
      CHECK(triplets.size() == static_cast<std::size_t>(non_o));
      CHECK(triplets.size() <= 4);
    }
  }
}

TEST_CASE("compound vs solo classification equivalence through the head") {
  const EncoderConfig cfg = tiny_config(24, 2);
  MatchingModel model(cfg, 21);
  Example ex;
  const auto pairs = build_pairs(ex.spans);
  const auto all = build_compound(ex.ids, ex.spans, pairs, cfg.max_len);
  const auto all_preds = model.predict_pairs(all);

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto solo = build_compound(ex.ids, ex.spans, {pairs[k]}, cfg.max_len);
    const auto solo_preds = model.predict_pairs(solo);
    REQUIRE(solo_preds.size() == 1);
    CHECK(solo_preds[0].label == all_preds[k].label);
    for (int j = 0; j < kMatchLabelCount; ++j)
      CHECK(std::abs(solo_preds[0].distribution[static_cast<std::size_t>(j)] -
                     all_preds[k].distribution[static_cast<std::size_t>(j)]) <= 1e-6);
  }
}

TEST_CASE("gradient check: extraction loss over a tiny encoder") {
  EncoderConfig cfg = tiny_config(16);
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 16;
  ExtractionModel model(cfg, 29);
  const std::vector<int> ids = {9, 10, 11, 12, 13};
  const std::vector<Tag> gold = {Tag::O, Tag::TargetSingle, Tag::O, Tag::OpinionBegin,
                                 Tag::OpinionEnd};
  const double worst = nn::grad_check(model.params(), [&]() {
    return model.loss(model.tag_distributions(ids), gold);
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: matching loss over a two-pair compound input") {
  EncoderConfig cfg = tiny_config(16);
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 16;
  MatchingModel model(cfg, 31);

  SpanSets spans;
  spans.targets = {{0, 0}};
  spans.opinions = {{2, 2}, {4, 4}};
  const auto pairs = build_pairs(spans);
  REQUIRE(pairs.size() == 2);
  const auto chunks = build_compound(word_ids(5), spans, pairs, cfg.max_len);
  const std::vector<MatchLabel> grid = {MatchLabel::POS, MatchLabel::O};

  const double worst =
      nn::grad_check(model.params(), [&]() { return model.loss(chunks, grid); });
  CHECK(worst < 1e-4);
}
