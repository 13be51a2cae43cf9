#include "aste/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace aste {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'T', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(double) == 8, "checkpoint format requires 64-bit doubles");

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& os, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    write_u64(os, bits);
  }
}

void read_doubles(std::istream& is, double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_u64(is);
    std::memcpy(&data[i], &bits, 8);
  }
}

nlohmann::json config_to_json(const EncoderConfig& c) {
  return {{"hidden", c.hidden},   {"layers", c.layers},     {"heads", c.heads},
          {"ffn", c.ffn},         {"max_len", c.max_len},   {"vocab", c.vocab},
          {"segments", c.segments}, {"dropout", c.dropout}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.vocab = j.at("vocab").get<int>();
  c.segments = j.at("segments").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& stage, const EncoderConfig& cfg,
                     const Vocabulary& vocab, const nn::ParamStore& params,
                     const CheckpointMeta& meta) {
  nlohmann::json manifest;
  manifest["stage"] = stage;
  manifest["config"] = config_to_json(cfg);
  manifest["vocab"] = vocab.tokens();
  manifest["meta"] = {{"epoch", meta.epoch},
                      {"dev_metric", meta.dev_metric},
                      {"seed", meta.seed},
                      {"ablation", ablation_name(meta.ablation)}};
  nlohmann::json plist = nlohmann::json::array();
  for (const auto& p : params.all())
    plist.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  manifest["params"] = plist;

  std::ofstream os(path, std::ios::binary);
  check(os.good(), "cannot write checkpoint: ", path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  const std::string text = manifest.dump();
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : params.all()) write_doubles(os, p->value.data(), p->value.size());
  check(os.good(), "checkpoint write failed: ", path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open checkpoint: ", path);
  char magic[8];
  is.read(magic, 8);
  check(is.good() && std::memcmp(magic, kMagic, 8) == 0, "not a checkpoint file: ", path);
  const std::uint32_t version = read_u32(is);
  check(version == kVersion, "unsupported checkpoint version ", version);

  const std::uint64_t len = read_u64(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  check(is.good(), "truncated checkpoint manifest: ", path);
  const nlohmann::json manifest = nlohmann::json::parse(text);

  LoadedCheckpoint out;
  out.stage = manifest.at("stage").get<std::string>();
  out.config = config_from_json(manifest.at("config"));
  out.vocab = Vocabulary::from_tokens(manifest.at("vocab").get<std::vector<std::string>>());
  const auto& meta = manifest.at("meta");
  out.meta.epoch = meta.at("epoch").get<int>();
  out.meta.dev_metric = meta.at("dev_metric").get<double>();
  out.meta.seed = meta.at("seed").get<std::uint64_t>();
  out.meta.ablation = ablation_from(meta.at("ablation").get<std::string>());

  for (const auto& entry : manifest.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Array a = Array::zeros(shape);
    read_doubles(is, a.data(), a.size());
    check(is.good(), "truncated checkpoint payload at ", name);
    out.params.emplace_back(name, std::move(a));
  }
  return out;
}

void restore_params(nn::ParamStore& params, const LoadedCheckpoint& ckpt) {
  check(params.all().size() == ckpt.params.size(), "checkpoint has ", ckpt.params.size(),
        " parameters, model expects ", params.all().size());
  for (const auto& [name, value] : ckpt.params) {
    nn::Parameter* p = params.find(name);
    check(p != nullptr, "checkpoint parameter ", name, " unknown to the model");
    check(p->value.same_shape(value), "checkpoint parameter ", name, " has mismatched shape");
    p->value = value;
    p->zero_grad();
  }
}

}  // namespace aste
