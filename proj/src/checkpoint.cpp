#include "amcnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "amcnn/errors.hpp"

namespace amcnn {
namespace {

using nlohmann::json;

constexpr char kMagic[] = "AMCNN1";
constexpr std::size_t kMagicSize = 6;
constexpr int kFormatVersion = 1;

json config_to_json(const ModelConfig& c) {
  json j;
  j["hidden_size"] = c.hidden_size;
  j["embedding_dim"] = c.embedding_dim;
  j["channels"] = c.channels;
  j["mode"] = to_string(c.mode);
  j["sum_axis"] = to_string(c.sum_axis);
  j["attention_hidden"] = c.attention_hidden;
  j["keep_probs"] = c.keep_probs;
  j["filter_widths"] = c.filter_widths;
  j["filter_maps"] = c.filter_maps;
  j["classes"] = c.classes;
  j["dropout_embedding"] = c.dropout_embedding;
  j["dropout_cnn_input"] = c.dropout_cnn_input;
  j["dropout_penultimate"] = c.dropout_penultimate;
  j["l2"] = c.l2;
  j["l2_biases"] = c.l2_biases;
  j["l2_embeddings"] = c.l2_embeddings;
  j["max_len"] = c.max_len;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.mode = parse_attention_mode(j.at("mode").get<std::string>());
  c.sum_axis = parse_sum_axis(j.at("sum_axis").get<std::string>());
  c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  c.keep_probs = j.at("keep_probs").get<std::vector<double>>();
  c.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
  c.filter_maps = j.at("filter_maps").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.dropout_embedding = j.at("dropout_embedding").get<double>();
  c.dropout_cnn_input = j.at("dropout_cnn_input").get<double>();
  c.dropout_penultimate = j.at("dropout_penultimate").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.l2_biases = j.at("l2_biases").get<bool>();
  c.l2_embeddings = j.at("l2_embeddings").get<bool>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const ModelConfig& config, const Vocabulary& vocab) {
  const auto named = params.named();
  if (!named.empty() && named.front().name == "embedding" &&
      named.front().tensor.dim(0) != vocab.size()) {
    throw DimensionError("save_checkpoint: embedding has " +
                         std::to_string(named.front().tensor.dim(0)) + " rows for a vocabulary of " +
                         std::to_string(vocab.size()));
  }
  json header;
  header["format_version"] = kFormatVersion;
  header["config"] = config_to_json(config);
  header["vocab"] = vocab.tokens();
  json tensors = json::array();
  for (const auto& n : named) tensors.push_back({{"name", n.name}, {"shape", n.tensor.shape()}});
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::string blob(kMagic, kMagicSize);
  put_u64(blob, text.size());
  blob += text;
  for (const auto& n : named)
    for (double v : n.tensor.values()) put_u64(blob, std::bit_cast<std::uint64_t>(v));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const std::string where = path.string() + ": ";

  if (blob.size() < kMagicSize + 8 || blob.compare(0, kMagicSize, kMagic) != 0)
    throw FormatError(where + "not an AMCNN1 checkpoint");
  const std::uint64_t header_size = get_u64(bytes + kMagicSize);
  const std::size_t body = kMagicSize + 8;
  if (header_size > blob.size() - body) throw FormatError(where + "truncated header");

  json header;
  try {
    header = json::parse(blob.substr(body, header_size));
  } catch (const json::exception& e) {
    throw FormatError(where + "bad header: " + e.what());
  }

  Checkpoint ck;
  std::vector<std::pair<std::string, Shape>> listed;
  try {
    if (header.at("format_version").get<int>() != kFormatVersion)
      throw FormatError(where + "unsupported format_version " + header.at("format_version").dump());
    ck.config = config_from_json(header.at("config"));
    ck.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    for (const auto& t : header.at("tensors"))
      listed.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
  } catch (const json::exception& e) {
    throw FormatError(where + "bad header: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + e.what());
  }
  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(where + e.what());
  }

  ck.params = ModelParams::zeros(ck.config, ck.vocab.size());
  auto named = ck.params.named();
  if (named.size() != listed.size())
    throw FormatError(where + "expected " + std::to_string(named.size()) + " tensors, header lists " +
                      std::to_string(listed.size()));
  std::size_t offset = body + header_size;
  for (std::size_t p = 0; p < named.size(); ++p) {
    if (listed[p].first != named[p].name || listed[p].second != named[p].tensor.shape()) {
      throw FormatError(where + "tensor " + std::to_string(p) + " is " + listed[p].first + " " +
                        shape_str(listed[p].second) + ", expected " + named[p].name + " " +
                        shape_str(named[p].tensor.shape()));
    }
    auto values = named[p].tensor.mutable_values();
    if (blob.size() - offset < 8 * values.size())
      throw FormatError(where + "truncated data in " + named[p].name);
    for (double& v : values) {
      v = std::bit_cast<double>(get_u64(bytes + offset));
      offset += 8;
    }
  }
  if (offset != blob.size()) throw FormatError(where + "trailing bytes after tensor data");
  return ck;
}

}  // namespace amcnn
