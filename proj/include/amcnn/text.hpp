#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "amcnn/rng.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn {

using TokenList = std::vector<std::string>;

/// Lowercases ASCII letters, splits on whitespace and emits each of
/// . , ! ? ; : ( ) " ' as its own token.
TokenList tokenize(std::string_view text);

/// Token <-> id map. Id 0 is always the unknown-word symbol.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// Rebuilds from an id-ordered token list whose first entry is the UNK symbol.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  friend Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t min_freq);
  void add(const std::string& token);

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

/// Keeps tokens seen at least min_freq times; ids ordered by descending
/// frequency, ties broken lexicographically.
Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t min_freq = 1);

struct EncodedRow {
  std::vector<int> ids;
  std::vector<bool> pad_mask;  // true on the padded prefix
};

/// Front-pads with UNK (or truncates at the end) to exactly `len` ids.
EncodedRow encode_and_pad(const TokenList& tokens, const Vocabulary& vocab, std::size_t len);

struct EncodedBatch {
  std::size_t len = 0;
  std::vector<EncodedRow> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
};

struct Example {
  int label = 0;
  std::string text;
};

EncodedBatch encode_examples(const std::vector<Example>& examples, const Vocabulary& vocab,
                             std::size_t len);

using PretrainedVectors = std::unordered_map<std::string, std::vector<double>>;

/// V x k matrix: rows of words in `pretrained` are copied, the rest are drawn
/// i.i.d. from U[-0.25, 0.25].
Tensor init_embeddings(const Vocabulary& vocab, std::size_t dim,
                       const PretrainedVectors* pretrained, SeedStream rng);

/// word2vec text format: a "V k" header line then V lines "token v1 ... vk".
PretrainedVectors load_word2vec_text(const std::filesystem::path& path);
void save_word2vec_text(const std::filesystem::path& path, const PretrainedVectors& vectors);

/// One "label<TAB>text" example per line.
std::vector<Example> load_dataset(const std::filesystem::path& path);

/// Longest tokenized example; the default padding length.
std::size_t max_token_length(const std::vector<Example>& examples);

}  // namespace amcnn
