#include "amcnn/text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "amcnn/errors.hpp"

namespace amcnn {
namespace {

bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '(': case ')': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string location(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_split_punct(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary() { add(std::string(kUnkToken)); }

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kUnkToken) {
    throw FormatError("vocabulary must start with the " + std::string(kUnkToken) + " symbol");
  }
  Vocabulary vocab;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (vocab.contains(tokens[i])) throw FormatError("duplicate vocabulary token '" + tokens[i] + "'");
    vocab.add(tokens[i]);
  }
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

void Vocabulary::add(const std::string& token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t min_freq) {
  if (min_freq < 1) throw ArgumentError("build_vocab: min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= min_freq && tok != Vocabulary::kUnkToken) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  for (const auto& entry : kept) vocab.add(entry.first);
  return vocab;
}

EncodedRow encode_and_pad(const TokenList& tokens, const Vocabulary& vocab, std::size_t len) {
  if (len < 1) throw ArgumentError("encode_and_pad: len must be >= 1");
  const std::size_t kept = std::min(tokens.size(), len);
  const std::size_t pads = len - kept;
  EncodedRow row;
  row.ids.assign(pads, Vocabulary::kUnkId);
  row.pad_mask.assign(len, false);
  std::fill_n(row.pad_mask.begin(), pads, true);
  for (std::size_t i = 0; i < kept; ++i) row.ids.push_back(vocab.lookup(tokens[i]));
  return row;
}

EncodedBatch encode_examples(const std::vector<Example>& examples, const Vocabulary& vocab,
                             std::size_t len) {
  EncodedBatch batch;
  batch.len = len;
  batch.rows.reserve(examples.size());
  batch.labels.reserve(examples.size());
  for (const auto& ex : examples) {
    batch.rows.push_back(encode_and_pad(tokenize(ex.text), vocab, len));
    batch.labels.push_back(ex.label);
  }
  return batch;
}

Tensor init_embeddings(const Vocabulary& vocab, std::size_t dim,
                       const PretrainedVectors* pretrained, SeedStream rng) {
  if (dim < 1) throw ArgumentError("init_embeddings: dimension must be >= 1");
  auto engine = rng.engine();
  std::uniform_real_distribution<double> uniform(-0.25, 0.25);
  std::vector<double> values(vocab.size() * dim);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    double* row = values.data() + id * dim;
    // Draw for every row so a word's random vector does not depend on
    // which other words happen to be pretrained.
    for (std::size_t j = 0; j < dim; ++j) row[j] = uniform(engine);
    if (pretrained == nullptr) continue;
    const auto it = pretrained->find(vocab.token(static_cast<int>(id)));
    if (it == pretrained->end()) continue;
    if (it->second.size() != dim) {
      throw FormatError("pretrained vector for '" + it->first + "' has dimension " +
                        std::to_string(it->second.size()) + ", expected " +
                        std::to_string(dim));
    }
    std::copy(it->second.begin(), it->second.end(), row);
  }
  return Tensor::matrix(vocab.size(), dim, std::move(values));
}

PretrainedVectors load_word2vec_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open word vectors " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(location(path, 1) + ": missing header");
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || dim == 0) {
      throw FormatError(location(path, 1) + ": header must be \"V k\"");
    }
  }
  PretrainedVectors vectors;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vec;
    vec.reserve(dim);
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError(location(path, line_no) + ": bad number '" + field + "'");
      }
      vec.push_back(v);
    }
    if (vec.size() != dim) {
      throw FormatError(location(path, line_no) + ": expected " + std::to_string(dim) +
                        " values, got " + std::to_string(vec.size()));
    }
    vectors[token] = std::move(vec);
  }
  if (vectors.size() != count) {
    throw FormatError(location(path, line_no) + ": header promised " + std::to_string(count) +
                      " vectors, found " + std::to_string(vectors.size()));
  }
  return vectors;
}

void save_word2vec_text(const std::filesystem::path& path, const PretrainedVectors& vectors) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write word vectors " + path.string());
  const std::size_t dim = vectors.empty() ? 1 : vectors.begin()->second.size();
  out << vectors.size() << ' ' << dim << '\n';
  std::map<std::string, const std::vector<double>*> sorted;
  for (const auto& [tok, vec] : vectors) sorted.emplace(tok, &vec);
  out.precision(9);
  for (const auto& [tok, vec] : sorted) {
    out << tok;
    for (double v : *vec) out << ' ' << v;
    out << '\n';
  }
}

std::vector<Example> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  std::vector<Example> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(location(path, line_no) + ": expected \"label<TAB>text\"");
    }
    int label = 0;
    const char* begin = line.data();
    const char* end = line.data() + tab;
    const auto [ptr, ec] = std::from_chars(begin, end, label);
    if (ec != std::errc() || ptr != end || label < 0) {
      throw FormatError(location(path, line_no) + ": label '" + line.substr(0, tab) +
                        "' is not a non-negative integer");
    }
    examples.push_back({label, line.substr(tab + 1)});
  }
  return examples;
}

std::size_t max_token_length(const std::vector<Example>& examples) {
  std::size_t longest = 0;
  for (const auto& ex : examples) longest = std::max(longest, tokenize(ex.text).size());
  return longest;
}

}  // namespace amcnn
