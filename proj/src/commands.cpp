#include "amcnn/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amcnn/checkpoint.hpp"
#include "amcnn/errors.hpp"
#include "amcnn/gradcheck.hpp"
#include "amcnn/run_config.hpp"
#include "amcnn/train.hpp"

namespace amcnn {
namespace {

constexpr std::string_view kPadToken = "<pad>";

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitShape;
  } catch (const ArgumentError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitShape;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config = options.config ? load_run_config(*options.config) : RunConfig{};
  if (options.seed) config.train.model.seed = *options.seed;
  if (options.out) config.output_dir = *options.out;
  if (options.checkpoint) config.checkpoint = *options.checkpoint;
  return config;
}

Checkpoint open_checkpoint(const RunConfig& config) {
  if (config.checkpoint.empty()) throw ConfigError("no checkpoint given (--checkpoint)");
  return load_checkpoint(config.checkpoint);
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return buffer;
}

// Splits train examples into (train, dev) with the data_split substream.
std::pair<std::vector<Example>, std::vector<Example>> split_dev(const std::vector<Example>& all,
                                                                double fraction,
                                                                std::uint64_t seed) {
  const auto dev_count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(all.size())));
  if (dev_count == 0 || dev_count >= all.size()) return {all, all};
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto engine = substream(seed, Stream::data_split).engine();
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<bool> is_dev(all.size(), false);
  for (std::size_t i = 0; i < dev_count; ++i) is_dev[order[i]] = true;
  std::vector<Example> train, dev;
  for (std::size_t i = 0; i < all.size(); ++i) (is_dev[i] ? dev : train).push_back(all[i]);
  return {train, dev};
}

struct InputLine {
  std::optional<int> label;
  std::string text;
};

// "label<TAB>text" when the prefix is a non-negative integer, raw text otherwise.
InputLine parse_input_line(const std::string& line) {
  const auto tab = line.find('\t');
  if (tab != std::string::npos && tab > 0) {
    int label = 0;
    const char* end = line.data() + tab;
    const auto [ptr, ec] = std::from_chars(line.data(), end, label);
    if (ec == std::errc() && ptr == end && label >= 0) return {label, line.substr(tab + 1)};
  }
  return {std::nullopt, line};
}

std::vector<std::string> display_tokens(const TokenList& tokens, std::size_t len) {
  const std::size_t kept = std::min(tokens.size(), len);
  std::vector<std::string> out(len - kept, std::string(kPadToken));
  out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(kept));
  return out;
}

}  // namespace

int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!options.config) throw ConfigError("train needs --config");
    RunConfig config = resolve_config(options);
    ModelConfig& model = config.train.model;
    model.validate();
    if (config.train_file.empty()) throw ConfigError("train_file is not set");

    const auto all = load_dataset(config.train_file);
    if (all.empty()) throw FormatError(config.train_file.string() + ": no examples");
    auto [train_examples, dev_examples] =
        config.dev_file.empty() ? split_dev(all, config.dev_fraction, model.seed)
                                : std::pair{all, load_dataset(config.dev_file)};
    std::optional<std::vector<Example>> test_examples;
    if (!config.test_file.empty()) test_examples = load_dataset(config.test_file);
    PretrainedVectors pretrained;
    if (!config.pretrained.empty()) pretrained = load_word2vec_text(config.pretrained);

    if (model.max_len == 0) {
      const std::size_t widest = *std::max_element(model.filter_widths.begin(), model.filter_widths.end());
      model.max_len = std::max(max_token_length(train_examples), widest);
    }
    model.validate(true);

    std::vector<TokenList> corpus;
    for (const auto& e : train_examples) corpus.push_back(tokenize(e.text));
    const Vocabulary vocab = build_vocab(corpus, config.min_freq);
    const EncodedBatch train_batch = encode_examples(train_examples, vocab, model.max_len);
    const EncodedBatch dev_batch = encode_examples(dev_examples, vocab, model.max_len);
    check_labels(train_batch, model);
    check_labels(dev_batch, model);

    const Tensor embedding =
        init_embeddings(vocab, model.embedding_dim, config.pretrained.empty() ? nullptr : &pretrained,
                        substream(model.seed, Stream::embedding_init));
    const ModelParams initial =
        ModelParams::init(model, embedding, substream(model.seed, Stream::param_init));

    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create " + config.output_dir.string());
    const auto metrics_path = config.output_dir / "metrics.jsonl";
    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("cannot write " + metrics_path.string());

    out << "train=" << train_batch.size() << " dev=" << dev_batch.size()
        << " vocab=" << vocab.size() << " len=" << model.max_len << '\n';
    Trainer trainer(config.train, initial, train_batch, dev_batch);
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
      const EpochMetrics m = trainer.run_epoch();
      metrics << to_json_line(m) << '\n' << std::flush;
      out << "epoch " << m.epoch << " train_loss=" << format_fixed(m.train_loss, 6)
          << " dev_accuracy=" << format_fixed(m.dev_accuracy, 4) << '\n';
    }
    if (!metrics) throw IoError("write failed: " + metrics_path.string());

    const auto checkpoint_path = config.output_dir / "model.ckpt";
    save_checkpoint(checkpoint_path, trainer.best_params(), model, vocab);
    out << "best epoch " << trainer.best_epoch() << ", checkpoint " << checkpoint_path.string()
        << '\n';
    if (test_examples) {
      const EncodedBatch test = encode_examples(*test_examples, vocab, model.max_len);
      out << "test accuracy="
          << format_fixed(evaluate(trainer.best_params(), test, model, config.train.threads), 4)
          << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(options);
    const Checkpoint ck = open_checkpoint(config);
    const auto data_path = options.data ? *options.data : config.test_file;
    if (data_path.empty()) throw ConfigError("no evaluation data given (--data)");
    const EncodedBatch data = encode_examples(load_dataset(data_path), ck.vocab, ck.config.max_len);
    check_labels(data, ck.config);
    out << "accuracy=" << format_fixed(evaluate(ck.params, data, ck.config, config.train.threads), 4)
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_predict(const CommandOptions& options, std::istream& in, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(options);
    const Checkpoint ck = open_checkpoint(config);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      EncodedBatch batch;
      batch.len = ck.config.max_len;
      batch.rows.push_back(encode_and_pad(tokenize(line), ck.vocab, ck.config.max_len));
      const ForwardResult result = forward(batch, ck.params, ck.config, SeedStream(0), false);
      out << result.attention[0].predicted << '\t';
      const auto& probs = result.probs[0];
      for (std::size_t j = 0; j < probs.size(); ++j)
        out << (j ? " " : "") << format_fixed(probs[j], 6);
      out << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_gradcheck(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ModelConfig model = tiny_config();
    std::size_t threads = 1;
    if (options.config) {
      const RunConfig config = resolve_config(options);
      model = config.train.model;
      threads = config.train.threads;
      if (model.max_len == 0) model.max_len = 7;
    } else if (options.seed) {
      model.seed = *options.seed;
    }
    model.validate(true);
    GradCheckOptions check;
    check.threads = threads;
    if (options.tolerance) check.tolerance = *options.tolerance;
    const GradCheckReport report = tiny_grad_check(model, check);
    char buffer[64];
    for (const auto& e : report.entries) {
      std::snprintf(buffer, sizeof buffer, "max_rel_error=%.3e\tmax_abs_error=%.3e", e.max_rel_error,
                    e.max_abs_error);
      out << e.name << '\t' << buffer << '\t' << (e.passed ? "ok" : "FAIL") << '\n';
    }
    std::snprintf(buffer, sizeof buffer, "%.3e", report.max_rel_error());
    out << (report.passed() ? "gradcheck passed" : "gradcheck FAILED") << ": max_rel_error=" << buffer
        << " tolerance=" << report.tolerance << '\n';
    return static_cast<int>(report.passed() ? kExitOk : kExitFailure);
  });
}

int cmd_inspect_attention(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(options);
    const Checkpoint ck = open_checkpoint(config);
    if (!options.data) throw ConfigError("inspect-attention needs --data");
    std::ifstream in(*options.data);
    if (!in) throw IoError("cannot open " + options.data->string());

    const std::size_t len = ck.config.max_len;
    EncodedBatch batch;
    batch.len = len;
    std::vector<InputLine> lines;
    std::vector<std::vector<std::string>> shown;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      lines.push_back(parse_input_line(line));
      const TokenList tokens = tokenize(lines.back().text);
      shown.push_back(display_tokens(tokens, len));
      batch.rows.push_back(encode_and_pad(tokens, ck.vocab, len));
    }
    const ForwardResult result =
        forward(batch, ck.params, ck.config, SeedStream(0), false, config.train.threads);

    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const AttentionRecord& rec = result.attention[i];
      nlohmann::ordered_json j;
      j["tokens"] = shown[i];
      j["pads"] = rec.pads;
      j["channels"] = rec.channels;
      j["predicted"] = rec.predicted;
      j["label"] = lines[i].label ? nlohmann::ordered_json(*lines[i].label) : nlohmann::ordered_json(nullptr);
      records.push_back(std::move(j));
    }
    const std::string text = records.dump() + "\n";
    if (options.out) {
      std::ofstream file(*options.out, std::ios::trunc);
      if (!file) throw IoError("cannot write " + options.out->string());
      file << text;
      if (!file) throw IoError("write failed: " + options.out->string());
      out << "wrote " << lines.size() << " records to " << options.out->string() << '\n';
    } else {
      out << text;
    }
    return static_cast<int>(kExitOk);
  });
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Attention-based multichannel CNN sentence classifier"};
  app.require_subcommand(1);
  CommandOptions options;
  std::string config, out_path, checkpoint, data;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  auto* config_opt = app.add_option("--config", config, "key = value run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "master seed, overrides the config");
  auto* out_opt =
      app.add_option("--out", out_path, "output directory (train) or JSON file (inspect-attention)");
  auto* checkpoint_opt = app.add_option("--checkpoint", checkpoint, "model checkpoint");
  auto* data_opt = app.add_option("--data", data, "labelled dataset or input sentences");
  auto* tolerance_opt = app.add_option("--tolerance", tolerance, "gradient check tolerance");

  auto* train = app.add_subcommand("train", "train a model, write model.ckpt and metrics.jsonl");
  auto* eval = app.add_subcommand("eval", "print accuracy on a labelled dataset");
  auto* predict = app.add_subcommand("predict", "classify sentences read from standard input");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare tape gradients to finite differences");
  auto* inspect = app.add_subcommand("inspect-attention", "export per-channel attention as JSON");
  for (auto* sub : {train, eval, predict, gradcheck, inspect}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*config_opt) options.config = config;
  if (*seed_opt) options.seed = seed;
  if (*out_opt) options.out = out_path;
  if (*checkpoint_opt) options.checkpoint = checkpoint;
  if (*data_opt) options.data = data;
  if (*tolerance_opt) options.tolerance = tolerance;

  if (train->parsed()) return cmd_train(options, out, err);
  if (eval->parsed()) return cmd_eval(options, out, err);
  if (predict->parsed()) return cmd_predict(options, in, out, err);
  if (gradcheck->parsed()) return cmd_gradcheck(options, out, err);
  return cmd_inspect_attention(options, out, err);
}

}  // namespace amcnn
