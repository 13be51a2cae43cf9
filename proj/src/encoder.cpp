#include "aste/encoder.hpp"

#include <cmath>

namespace aste {

using nn::Var;

namespace {

Array normal_init(Rng& rng, std::vector<int> shape, double stddev = 0.02) {
  Array a = Array::zeros(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal(0.0, stddev);
  return a;
}

Array ones(int n) {
  Array a = Array::zeros({n});
  a.fill(1.0);
  return a;
}

}  // namespace

Encoder::Encoder(const EncoderConfig& cfg, nn::ParamStore& store, Rng& rng,
                 const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.hidden;
  tok_emb_ = &store.add(prefix + ".tok_emb", normal_init(rng, {cfg_.vocab, d}));
  pos_emb_ = &store.add(prefix + ".pos_emb", normal_init(rng, {cfg_.max_len, d}));
  seg_emb_ = &store.add(prefix + ".seg_emb", normal_init(rng, {cfg_.segments, d}));
  emb_ln_g_ = &store.add(prefix + ".emb_ln.gain", ones(d));
  emb_ln_b_ = &store.add(prefix + ".emb_ln.bias", Array::zeros({d}));

  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    Layer layer;
    layer.wq = &store.add(lp + ".attn.wq", normal_init(rng, {d, d}));
    layer.bq = &store.add(lp + ".attn.bq", Array::zeros({d}));
    layer.wk = &store.add(lp + ".attn.wk", normal_init(rng, {d, d}));
    layer.bk = &store.add(lp + ".attn.bk", Array::zeros({d}));
    layer.wv = &store.add(lp + ".attn.wv", normal_init(rng, {d, d}));
    layer.bv = &store.add(lp + ".attn.bv", Array::zeros({d}));
    layer.wo = &store.add(lp + ".attn.wo", normal_init(rng, {d, d}));
    layer.bo = &store.add(lp + ".attn.bo", Array::zeros({d}));
    layer.ln1_g = &store.add(lp + ".ln1.gain", ones(d));
    layer.ln1_b = &store.add(lp + ".ln1.bias", Array::zeros({d}));
    layer.w1 = &store.add(lp + ".ffn.w1", normal_init(rng, {d, cfg_.ffn}));
    layer.b1 = &store.add(lp + ".ffn.b1", Array::zeros({cfg_.ffn}));
    layer.w2 = &store.add(lp + ".ffn.w2", normal_init(rng, {cfg_.ffn, d}));
    layer.b2 = &store.add(lp + ".ffn.b2", Array::zeros({d}));
    layer.ln2_g = &store.add(lp + ".ln2.gain", ones(d));
    layer.ln2_b = &store.add(lp + ".ln2.bias", Array::zeros({d}));
    layers_.push_back(layer);
  }
}

Var Encoder::embed(const std::vector<int>& token_ids, const std::vector<int>& position_ids,
                   const std::vector<int>& segment_ids) const {
  check(token_ids.size() == position_ids.size() && token_ids.size() == segment_ids.size(),
        "embed: id sequences differ in length");
  check(!token_ids.empty(), "embed: empty input");
  for (int id : token_ids)
    check(id >= 0 && id < cfg_.vocab, "embed: token id ", id, " out of range");
  for (int id : position_ids)
    check(id >= 0 && id < cfg_.max_len, "embed: position id ", id, " out of range");
  for (int id : segment_ids)
    check(id >= 0 && id < cfg_.segments, "embed: segment id ", id, " out of range");

  Var tok = nn::gather_rows(nn::leaf(*tok_emb_), token_ids);
  Var pos = nn::gather_rows(nn::leaf(*pos_emb_), position_ids);
  Var seg = nn::gather_rows(nn::leaf(*seg_emb_), segment_ids);
  return nn::add(nn::add(tok, pos), seg);
}

EncoderOutput Encoder::encode(const Var& embedded, const BoolMatrix& mask, bool keep_attention,
                              bool train, Rng* dropout_rng) const {
  const int seq = embedded.rows();
  const int d = cfg_.hidden;
  check(embedded.cols() == d, "encode: embedding width ", embedded.cols(), " vs hidden ", d);
  check(mask.rows == seq && mask.cols == seq, "encode: mask must be seq x seq");
  if (train && cfg_.dropout > 0.0)
    check(dropout_rng != nullptr, "encode: training with dropout needs an rng");

  const int dk = d / cfg_.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  auto drop = [&](const Var& v) {
    return dropout_rng ? nn::dropout(v, cfg_.dropout, *dropout_rng, train) : v;
  };

  EncoderOutput out;
  Var x = nn::layer_norm(embedded, nn::leaf(*emb_ln_g_), nn::leaf(*emb_ln_b_));
  x = drop(x);

  for (const Layer& layer : layers_) {
    Var q = nn::add_bias(nn::matmul(x, nn::leaf(*layer.wq)), nn::leaf(*layer.bq));
    Var k = nn::add_bias(nn::matmul(x, nn::leaf(*layer.wk)), nn::leaf(*layer.bk));
    Var v = nn::add_bias(nn::matmul(x, nn::leaf(*layer.wv)), nn::leaf(*layer.bv));

    std::vector<Array> layer_attention;
    Var context;
    for (int h = 0; h < cfg_.heads; ++h) {
      Var qh = nn::slice_cols(q, h * dk, dk);
      Var kh = nn::slice_cols(k, h * dk, dk);
      Var vh = nn::slice_cols(v, h * dk, dk);
      Var probs = nn::masked_softmax(nn::scale(nn::matmul_nt(qh, kh), inv_sqrt_dk), mask);
      if (keep_attention) layer_attention.push_back(probs.value());
      Var ctx = nn::matmul(probs, vh);
      context = h == 0 ? ctx : nn::concat_cols(context, ctx);
    }
    if (keep_attention) out.attention.push_back(std::move(layer_attention));

    Var attn_out = nn::add_bias(nn::matmul(context, nn::leaf(*layer.wo)), nn::leaf(*layer.bo));
    x = nn::layer_norm(nn::add(x, drop(attn_out)), nn::leaf(*layer.ln1_g), nn::leaf(*layer.ln1_b));

    Var h1 = nn::gelu(nn::add_bias(nn::matmul(x, nn::leaf(*layer.w1)), nn::leaf(*layer.b1)));
    Var h2 = nn::add_bias(nn::matmul(h1, nn::leaf(*layer.w2)), nn::leaf(*layer.b2));
    x = nn::layer_norm(nn::add(x, drop(h2)), nn::leaf(*layer.ln2_g), nn::leaf(*layer.ln2_b));
  }

  out.hidden = x;
  return out;
}

std::vector<std::vector<Array>> dump_attention(const EncoderOutput& output, int query_position) {
  check(!output.attention.empty(), "dump_attention: attention weights were not retained");
  std::vector<std::vector<Array>> rows;
  for (const auto& layer : output.attention) {
    std::vector<Array> per_head;
    for (const Array& weights : layer) {
      check(query_position >= 0 && query_position < weights.rows(),
            "dump_attention: query position ", query_position, " out of range");
      Array row = Array::zeros({weights.cols()});
      for (int j = 0; j < weights.cols(); ++j) row[static_cast<std::size_t>(j)] = weights.at(query_position, j);
      per_head.push_back(std::move(row));
    }
    rows.push_back(std::move(per_head));
  }
  return rows;
}

}  // namespace aste
