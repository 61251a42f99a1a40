#include "amcnn/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "amcnn/errors.hpp"

namespace amcnn {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": '" + text + "' is not a valid number");
  return value;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  if (!text.empty() && text.front() == '-') throw ConfigError(key + ": must not be negative");
  return parse_number<std::size_t>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&,
                                  const std::filesystem::path&)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (value.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

template <typename F>
Setter model(F field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v,
                 const std::filesystem::path&) { field(c.train.model, k, v); };
}

Setter count_of(std::size_t ModelConfig::*member) {
  return model([member](ModelConfig& m, const std::string& k, const std::string& v) {
    m.*member = parse_count(k, v);
  });
}

Setter real_of(double ModelConfig::*member) {
  return model([member](ModelConfig& m, const std::string& k, const std::string& v) {
    m.*member = parse_number<double>(k, v);
  });
}

Setter flag_of(bool ModelConfig::*member) {
  return model([member](ModelConfig& m, const std::string& k, const std::string& v) {
    m.*member = parse_bool(k, v);
  });
}

Setter path_of(std::filesystem::path RunConfig::*member) {
  return [member](RunConfig& c, const std::string&, const std::string& v,
                  const std::filesystem::path& base) { c.*member = resolve(base, v); };
}

Setter adam_of(double AdamOptions::*member) {
  return [member](RunConfig& c, const std::string& k, const std::string& v,
                  const std::filesystem::path&) { c.train.adam.*member = parse_number<double>(k, v); };
}

// std::map keeps run_config_keys() sorted, which is as good an order as any.
const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"hidden_size", count_of(&ModelConfig::hidden_size)},
      {"embedding_dim", count_of(&ModelConfig::embedding_dim)},
      {"channels", count_of(&ModelConfig::channels)},
      {"attention.mode", model([](ModelConfig& m, const std::string&, const std::string& v) {
         m.mode = parse_attention_mode(v);
       })},
      {"attention.sum_axis", model([](ModelConfig& m, const std::string&, const std::string& v) {
         m.sum_axis = parse_sum_axis(v);
       })},
      {"attention.keep_prob", model([](ModelConfig& m, const std::string& k, const std::string& v) {
         m.keep_probs.clear();
         for (const auto& part : split_list(v)) m.keep_probs.push_back(parse_number<double>(k, part));
       })},
      {"attention.hidden_size", count_of(&ModelConfig::attention_hidden)},
      {"filter_widths", model([](ModelConfig& m, const std::string& k, const std::string& v) {
         m.filter_widths.clear();
         for (const auto& part : split_list(v)) m.filter_widths.push_back(parse_count(k, part));
       })},
      {"filter_maps", count_of(&ModelConfig::filter_maps)},
      {"classes", count_of(&ModelConfig::classes)},
      {"dropout.embedding", real_of(&ModelConfig::dropout_embedding)},
      {"dropout.cnn_input", real_of(&ModelConfig::dropout_cnn_input)},
      {"dropout.penultimate", real_of(&ModelConfig::dropout_penultimate)},
      {"l2", real_of(&ModelConfig::l2)},
      {"l2_biases", flag_of(&ModelConfig::l2_biases)},
      {"l2_embeddings", flag_of(&ModelConfig::l2_embeddings)},
      {"max_len", count_of(&ModelConfig::max_len)},
      {"seed", model([](ModelConfig& m, const std::string& k, const std::string& v) {
         m.seed = parse_number<std::uint64_t>(k, v);
       })},
      {"learning_rate", adam_of(&AdamOptions::learning_rate)},
      {"beta1", adam_of(&AdamOptions::beta1)},
      {"beta2", adam_of(&AdamOptions::beta2)},
      {"adam_epsilon", adam_of(&AdamOptions::epsilon)},
      {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v,
                        const std::filesystem::path&) { c.train.batch_size = parse_count(k, v); }},
      {"epochs", [](RunConfig& c, const std::string& k, const std::string& v,
                    const std::filesystem::path&) { c.train.epochs = parse_count(k, v); }},
      {"threads", [](RunConfig& c, const std::string& k, const std::string& v,
                     const std::filesystem::path&) { c.train.threads = parse_count(k, v); }},
      {"min_freq", [](RunConfig& c, const std::string& k, const std::string& v,
                      const std::filesystem::path&) { c.min_freq = parse_count(k, v); }},
      {"dev_fraction", [](RunConfig& c, const std::string& k, const std::string& v,
                          const std::filesystem::path&) {
         c.dev_fraction = parse_number<double>(k, v);
         if (!(c.dev_fraction >= 0.0 && c.dev_fraction < 1.0))
           throw ConfigError(k + ": must be in [0, 1)");
       }},
      {"train_file", path_of(&RunConfig::train_file)},
      {"dev_file", path_of(&RunConfig::dev_file)},
      {"test_file", path_of(&RunConfig::test_file)},
      {"pretrained", path_of(&RunConfig::pretrained)},
      {"checkpoint", path_of(&RunConfig::checkpoint)},
      {"output_dir", path_of(&RunConfig::output_dir)},
  };
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(config, key, value, base_dir);
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [key, setter] : setters()) out.push_back(key);
    return out;
  }();
  return keys;
}

RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(std::string_view(line).substr(0, hash));
    if (content.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected \"key = value\"");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    try {
      apply_setting(config, key, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string(), path.parent_path());
}

}  // namespace amcnn
