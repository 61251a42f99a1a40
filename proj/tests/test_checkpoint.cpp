#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "amcnn/checkpoint.hpp"
#include "amcnn/errors.hpp"
#include "amcnn/gradcheck.hpp"
#include "amcnn/train.hpp"

using namespace amcnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "amcnn_checkpoint_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

struct Saved {
  ModelConfig config;
  Vocabulary vocab;
  ModelParams params;
};

Saved make_model() {
  Saved s;
  s.config = tiny_config(AttentionMode::combined, 3);
  s.config.keep_probs = {0.7, 0.8, 0.9};
  s.config.sum_axis = SumAxis::row;
  s.config.seed = 1234567890123ULL;
  s.vocab = build_vocab({{"alpha", "beta", "gamma", "beta", "delta", "e", "f", "g", "h", "i", "j"}});
  const Tensor emb = init_embeddings(s.vocab, s.config.embedding_dim, nullptr, SeedStream(4));
  s.params = ModelParams::init(s.config, emb, SeedStream(5));
  // Values that do not survive a decimal round trip.
  s.params.head.bias.mutable_values()[0] = 0.1 + 0.2;
  s.params.head.bias.mutable_values()[1] = -5e-324;
  return s;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save then load is bit-exact") {
  const Saved s = make_model();
  const fs::path path = scratch("rt.ckpt");
  save_checkpoint(path, s.params, s.config, s.vocab);
  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.vocab.tokens() == s.vocab.tokens());
  CHECK(ck.config.keep_probs == s.config.keep_probs);
  CHECK(ck.config.sum_axis == SumAxis::row);
  CHECK(ck.config.seed == s.config.seed);
  CHECK(ck.config.max_len == s.config.max_len);
  const auto a = s.params.named(), b = ck.params.named();
  REQUIRE(a.size() == b.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    CHECK(a[p].name == b[p].name);
    CHECK(a[p].tensor.shape() == b[p].tensor.shape());
    const auto av = a[p].tensor.values(), bv = b[p].tensor.values();
    CHECK(std::memcmp(av.data(), bv.data(), av.size() * sizeof(double)) == 0);
  }
  // Saving the loaded model reproduces the file byte for byte.
  const fs::path again = scratch("rt2.ckpt");
  save_checkpoint(again, ck.params, ck.config, ck.vocab);
  CHECK(read_bytes(path) == read_bytes(again));
}

TEST_CASE("evaluation of the loaded model is identical") {
  const Saved s = make_model();
  const fs::path path = scratch("eval.ckpt");
  save_checkpoint(path, s.params, s.config, s.vocab);
  const Checkpoint ck = load_checkpoint(path);
  const EncodedBatch batch = random_batch(40, 7, s.vocab.size(), 3, SeedStream(6));
  CHECK(evaluate(ck.params, batch, ck.config) == evaluate(s.params, batch, s.config));
  const ForwardResult a = forward(batch, s.params, s.config, SeedStream(0), false);
  const ForwardResult b = forward(batch, ck.params, ck.config, SeedStream(0), false);
  CHECK(a.loss == b.loss);
  CHECK(a.probs == b.probs);
}

TEST_CASE("file layout starts with the magic and a little-endian header length") {
  const Saved s = make_model();
  const fs::path path = scratch("layout.ckpt");
  save_checkpoint(path, s.params, s.config, s.vocab);
  const std::string bytes = read_bytes(path);
  REQUIRE(bytes.size() > 14);
  CHECK(bytes.substr(0, 6) == "AMCNN1");
  std::uint64_t len = 0;
  for (int b = 7; b >= 0; --b) len = (len << 8) | static_cast<unsigned char>(bytes[6 + b]);
  CHECK(bytes[14] == '{');
  CHECK(bytes[14 + len - 1] == '}');
  std::size_t values = 0;
  for (const auto& n : s.params.named()) values += n.tensor.size();
  CHECK(bytes.size() == 14 + len + 8 * values);
}

TEST_CASE("damaged files are rejected") {
  const Saved s = make_model();
  const fs::path path = scratch("good.ckpt");
  save_checkpoint(path, s.params, s.config, s.vocab);
  const std::string bytes = read_bytes(path);
  const fs::path bad = scratch("bad.ckpt");

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{13}, std::size_t{40},
                          bytes.size() - 1, bytes.size() - 8}) {
    CAPTURE(cut);
    write_bytes(bad, bytes.substr(0, cut));
    CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  }
  write_bytes(bad, bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  std::string magic = bytes;
  magic[5] = '2';
  write_bytes(bad, magic);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  std::string version = bytes;
  const auto at = version.find("\"format_version\":1");
  REQUIRE(at != std::string::npos);
  version[at + 17] = '9';
  write_bytes(bad, version);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
}

TEST_CASE("a header whose shapes disagree with its config is rejected") {
  const Saved s = make_model();
  const fs::path path = scratch("shape.ckpt");
  save_checkpoint(path, s.params, s.config, s.vocab);
  std::string bytes = read_bytes(path);
  const auto at = bytes.find("\"filter_maps\":3");
  REQUIRE(at != std::string::npos);
  bytes[at + 14] = '4';
  write_bytes(path, bytes);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}

TEST_CASE("missing files and vocabulary mismatches") {
  CHECK_THROWS_AS(load_checkpoint(scratch("does-not-exist.ckpt")), IoError);
  const Saved s = make_model();
  const Vocabulary small = build_vocab({{"x"}});
  CHECK_THROWS_AS(save_checkpoint(scratch("v.ckpt"), s.params, s.config, small), DimensionError);
  CHECK_THROWS_AS(save_checkpoint("/nonexistent-dir/amcnn/x.ckpt", s.params, s.config, s.vocab),
                  IoError);
}

}  // TEST_SUITE
