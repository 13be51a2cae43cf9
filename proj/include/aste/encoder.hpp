#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aste/autograd.hpp"

namespace aste {

struct EncoderConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn = 256;
  int max_len = 256;
  int vocab = 0;
  int segments = 2;
  double dropout = 0.1;

  void validate() const {
    check(hidden > 0 && layers > 0 && heads > 0 && ffn > 0, "encoder config: sizes must be positive");
    check(hidden % heads == 0, "encoder config: hidden ", hidden, " not divisible by heads ", heads);
    check(vocab > 0, "encoder config: vocab size unset");
    check(dropout >= 0.0 && dropout < 1.0, "encoder config: dropout out of range");
  }
};

struct EncoderOutput {
  nn::Var hidden;  // [seq × d]
  // attention[layer][head] is the [seq × seq] weight matrix, retained only
  // when encode() was asked to keep it.
  std::vector<std::vector<Array>> attention;
};

/// Transformer encoder: token/position/segment embeddings, post-layer-norm
/// residual blocks with GELU feed-forward, per-pass boolean attention mask.
class Encoder {
 public:
  /// Registers all parameters in `store` under `prefix` and initializes
  /// them from `rng` (normal, stddev 0.02; layer-norm gains at 1).
  Encoder(const EncoderConfig& cfg, nn::ParamStore& store, Rng& rng,
          const std::string& prefix = "enc");

  /// Sum of token + position + segment embeddings, one row per input id.
  /// Normalization happens at the start of encode().
  nn::Var embed(const std::vector<int>& token_ids, const std::vector<int>& position_ids,
                const std::vector<int>& segment_ids) const;

  EncoderOutput encode(const nn::Var& embedded, const BoolMatrix& mask,
                       bool keep_attention = false, bool train = false,
                       Rng* dropout_rng = nullptr) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Layer {
    nn::Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    nn::Parameter *ln1_g, *ln1_b;
    nn::Parameter *w1, *b1, *w2, *b2;
    nn::Parameter *ln2_g, *ln2_b;
  };

  EncoderConfig cfg_;
  nn::Parameter *tok_emb_, *pos_emb_, *seg_emb_;
  nn::Parameter *emb_ln_g_, *emb_ln_b_;
  std::vector<Layer> layers_;
};

/// Attention rows of one query position: out[layer][head] is that row's
/// distribution over all keys. Requires keep_attention at encode time.
std::vector<std::vector<Array>> dump_attention(const EncoderOutput& output, int query_position);

}  // namespace aste
