#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aste/autograd.hpp"
#include "aste/corpus.hpp"
#include "aste/encoder.hpp"
#include "aste/pairing.hpp"

namespace aste {

struct CheckpointMeta {
  int epoch = 0;
  double dev_metric = 0.0;
  std::uint64_t seed = 0;
  AblationMode ablation = AblationMode::None;
};

/// Single-file checkpoint: magic + version, a JSON manifest (stage, encoder
/// config, vocabulary in id order, metadata, parameter names/shapes in
/// store order), then one raw little-endian float64 payload per parameter.
void save_checkpoint(const std::string& path, const std::string& stage, const EncoderConfig& cfg,
                     const Vocabulary& vocab, const nn::ParamStore& params,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::string stage;
  EncoderConfig config;
  Vocabulary vocab;
  CheckpointMeta meta;
  std::vector<std::pair<std::string, Array>> params;  // in manifest order
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Copies loaded arrays into the store; name sets and shapes must match
/// exactly.
void restore_params(nn::ParamStore& params, const LoadedCheckpoint& ckpt);

}  // namespace aste
