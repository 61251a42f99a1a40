#include "amcnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amcnn/errors.hpp"
#include "amcnn/ops.hpp"
#include "parallel.hpp"

namespace amcnn {
namespace {

constexpr std::size_t kMaxChunks = 8;

Tensor xavier_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng);
  return Tensor::matrix(rows, cols, std::move(values));
}

bool uses_scalar(AttentionMode mode) { return mode != AttentionMode::vectorial; }
bool uses_vectorial(AttentionMode mode) { return mode != AttentionMode::scalar; }

template <typename Fn>
void visit_lstm(LstmParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "forget_weight", p.forget_weight, ParamKind::weight);
  fn(prefix + "input_weight", p.input_weight, ParamKind::weight);
  fn(prefix + "output_weight", p.output_weight, ParamKind::weight);
  fn(prefix + "cell_weight", p.cell_weight, ParamKind::weight);
  fn(prefix + "forget_bias", p.forget_bias, ParamKind::bias);
  fn(prefix + "input_bias", p.input_bias, ParamKind::bias);
  fn(prefix + "output_bias", p.output_bias, ParamKind::bias);
  fn(prefix + "cell_bias", p.cell_bias, ParamKind::bias);
}

// Visits every defined parameter tensor in the canonical order.
template <typename Fn>
void visit_params(ModelParams& p, Fn&& fn) {
  auto maybe = [&](const std::string& name, Tensor& t, ParamKind kind) {
    if (t.defined()) fn(name, t, kind);
  };
  maybe("embedding", p.embedding, ParamKind::embedding);
  visit_lstm(p.encoder.forward, "encoder.forward.", maybe);
  visit_lstm(p.encoder.backward, "encoder.backward.", maybe);
  for (std::size_t l = 0; l < p.channels.size(); ++l) {
    const std::string prefix = "channel" + std::to_string(l) + ".";
    auto& c = p.channels[l];
    maybe(prefix + "scalar.weight", c.scalar.weight, ParamKind::weight);
    maybe(prefix + "scalar.bias", c.scalar.bias, ParamKind::bias);
    maybe(prefix + "vectorial.hidden_weight", c.vectorial.hidden_weight, ParamKind::weight);
    maybe(prefix + "vectorial.hidden_bias", c.vectorial.hidden_bias, ParamKind::bias);
    maybe(prefix + "vectorial.score_weight", c.vectorial.score_weight, ParamKind::weight);
  }
  for (std::size_t i = 0; i < p.conv.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i) + ".";
    maybe(prefix + "weights", p.conv[i].weights, ParamKind::weight);
    maybe(prefix + "bias", p.conv[i].bias, ParamKind::bias);
  }
  maybe("head.weight", p.head.weight, ParamKind::weight);
  maybe("head.bias", p.head.bias, ParamKind::bias);
}

bool counts_toward_l2(ParamKind kind, const ModelConfig& config) {
  switch (kind) {
    case ParamKind::weight: return true;
    case ParamKind::bias: return config.l2_biases;
    case ParamKind::embedding: return config.l2_embeddings;
  }
  return false;
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids, bool requires_grad) {
  const std::size_t k = table.dim(1);
  const auto values = table.values();
  std::vector<double> out(ids.size() * k);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto id = static_cast<std::size_t>(ids[t]);
    if (ids[t] < 0 || id >= table.dim(0)) {
      throw ConfigError("token id " + std::to_string(ids[t]) + " outside vocabulary of " +
                        std::to_string(table.dim(0)));
    }
    std::copy_n(values.data() + id * k, k, out.data() + t * k);
  }
  return Tensor::matrix(ids.size(), k, std::move(out), requires_grad);
}

}  // namespace

double ModelConfig::keep_prob(std::size_t channel) const {
  return keep_probs.size() == 1 ? keep_probs.front() : keep_probs.at(channel);
}

std::size_t ModelConfig::attention_size() const {
  return attention_hidden == 0 ? 2 * hidden_size : attention_hidden;
}

void ModelConfig::validate(bool check_len) const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(hidden_size, "hidden_size");
  positive(embedding_dim, "embedding_dim");
  positive(channels, "channels");
  positive(filter_maps, "filter_maps");
  if (classes < 2) throw ConfigError("classes must be at least 2");
  if (filter_widths.empty()) throw ConfigError("filter_widths must not be empty");
  for (auto w : filter_widths) positive(w, "filter width");
  for (double r : {dropout_embedding, dropout_cnn_input, dropout_penultimate}) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("dropout rates must lie in [0, 1)");
  }
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (keep_probs.size() != 1 && keep_probs.size() != channels) {
    throw ConfigError("keep_prob needs 1 or " + std::to_string(channels) + " values, got " +
                      std::to_string(keep_probs.size()));
  }
  for (double p : keep_probs) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("keep_prob values must lie in (0, 1]");
  }
  if (check_len) {
    const auto widest = *std::max_element(filter_widths.begin(), filter_widths.end());
    if (max_len < widest) {
      throw ConfigError("max_len " + std::to_string(max_len) + " is shorter than filter width " +
                        std::to_string(widest));
    }
  }
}

ModelParams ModelParams::init(const ModelConfig& config, Tensor embedding, SeedStream rng) {
  config.validate();
  if (embedding.rank() != 2 || embedding.dim(1) != config.embedding_dim) {
    throw ConfigError("embedding matrix " + shape_str(embedding.shape()) +
                      " does not match embedding_dim " + std::to_string(config.embedding_dim));
  }
  const std::size_t d = config.hidden_size;
  const std::size_t width = 2 * d;
  const std::size_t a = config.attention_size();
  ModelParams p;
  p.embedding = std::move(embedding);
  {
    auto engine = rng.child(0).engine();
    p.encoder.forward = LstmParams::init(d, config.embedding_dim, engine);
  }
  {
    auto engine = rng.child(1).engine();
    p.encoder.backward = LstmParams::init(d, config.embedding_dim, engine);
  }
  for (std::size_t l = 0; l < config.channels; ++l) {
    auto engine = rng.child(10 + l).engine();
    ChannelParams c;
    if (uses_scalar(config.mode)) {
      c.scalar.weight = xavier_matrix(width, width, engine);
      c.scalar.bias = Tensor::zeros({1});
    }
    c.scalar.keep_prob = config.keep_prob(l);
    if (uses_vectorial(config.mode)) {
      c.vectorial.hidden_weight = xavier_matrix(a, width, engine);
      c.vectorial.hidden_bias = Tensor::zeros({a});
      c.vectorial.score_weight = xavier_matrix(a, width, engine);
    }
    p.channels.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < config.filter_widths.size(); ++i) {
    auto engine = rng.child(100 + i).engine();
    const std::size_t w = config.filter_widths[i];
    ConvBank bank;
    bank.width = w;
    bank.weights = xavier_matrix(config.filter_maps, w * config.channels * width, engine);
    bank.bias = Tensor::zeros({config.filter_maps});
    p.conv.push_back(std::move(bank));
  }
  {
    auto engine = rng.child(200).engine();
    p.head.weight = xavier_matrix(config.classes, config.feature_count(), engine);
    p.head.bias = Tensor::zeros({config.classes});
  }
  return p;
}

ModelParams ModelParams::zeros(const ModelConfig& config, std::size_t vocab_size) {
  ModelParams p = init(config, Tensor::zeros({vocab_size, config.embedding_dim}), SeedStream(0));
  visit_params(p, [](const std::string&, Tensor& t, ParamKind) {
    std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
  });
  return p;
}

std::vector<NamedTensor> ModelParams::named() const {
  ModelParams view = *this;
  std::vector<NamedTensor> out;
  visit_params(view, [&](const std::string& name, Tensor& t, ParamKind kind) {
    out.push_back({name, t, kind});
  });
  return out;
}

ModelParams ModelParams::alias(bool requires_grad) const {
  ModelParams out = *this;
  visit_params(out, [&](const std::string&, Tensor& t, ParamKind) { t = t.alias(requires_grad); });
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams out = *this;
  visit_params(out, [](const std::string&, Tensor& t, ParamKind) { t = t.clone(); });
  return out;
}

Tensor apply_dropout(Tape& tape, const Tensor& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution drop(rate);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = drop(rng) ? 0.0 : keep_scale;
  return mul(tape, x, Tensor(x.shape(), std::move(mask)));
}

double l2_penalty(const ModelParams& params, const ModelConfig& config) {
  if (config.l2 == 0.0) return 0.0;
  // Same summation order as the taped version below.
  double total = 0.0;
  for (const auto& p : params.named()) {
    if (!counts_toward_l2(p.kind, config)) continue;
    double squares = 0.0;
    for (double v : p.tensor.values()) squares += v * v;
    total += squares;
  }
  return total * (0.5 * config.l2);
}

Tensor l2_penalty(Tape& tape, const ModelParams& params, const ModelConfig& config) {
  Tensor total = Tensor::scalar(0.0);
  if (config.l2 == 0.0) return total;
  for (const auto& p : params.named()) {
    if (!counts_toward_l2(p.kind, config)) continue;
    total = add(tape, total, sum(tape, mul(tape, p.tensor, p.tensor)));
  }
  return scale(tape, total, 0.5 * config.l2);
}

ExampleOutput forward_example(Tape& tape, const ModelParams& params, const ModelConfig& config,
                              const EncodedRow& row, std::optional<int> label, SeedStream rng,
                              bool training) {
  if (row.ids.size() != row.pad_mask.size() || row.ids.empty()) {
    throw ConfigError("encoded row has " + std::to_string(row.ids.size()) + " ids and " +
                      std::to_string(row.pad_mask.size()) + " mask entries");
  }
  ExampleOutput out;
  out.embedded = gather_rows(params.embedding, row.ids, tape.recording());

  auto embed_rng = rng.child(0).engine();
  const Tensor inputs =
      apply_dropout(tape, out.embedded, config.dropout_embedding, embed_rng, training);
  const Tensor hidden = bilstm_encode(tape, inputs, params.encoder);

  out.channels = build_channels(tape, hidden, row.pad_mask, params.channels, config.mode,
                                config.sum_axis, rng.child(3), training);

  std::vector<Tensor> cnn_inputs;
  for (std::size_t l = 0; l < out.channels.channels.size(); ++l) {
    auto engine = rng.child(1).child(l).engine();
    cnn_inputs.push_back(apply_dropout(tape, out.channels.channels[l], config.dropout_cnn_input,
                                       engine, training));
  }

  std::vector<Tensor> pooled;
  for (const auto& bank : params.conv) pooled.push_back(max_pool(tape, conv_forward(tape, cnn_inputs, bank)));
  Tensor features = concat(tape, pooled, 0);
  auto penultimate_rng = rng.child(2).engine();
  features = apply_dropout(tape, features, config.dropout_penultimate, penultimate_rng, training);

  out.probs = classify(tape, features, params.head);
  if (label) out.loss = cross_entropy(tape, out.probs, static_cast<std::size_t>(*label));
  return out;
}

void check_labels(const EncodedBatch& batch, const ModelConfig& config) {
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    const int y = batch.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= config.classes) {
      throw ArgumentError("label " + std::to_string(y) + " of example " + std::to_string(i) +
                          " outside [0, " + std::to_string(config.classes) + ")");
    }
  }
}

ForwardResult forward(const EncodedBatch& batch, const ModelParams& params,
                      const ModelConfig& config, SeedStream rng, bool training,
                      std::size_t threads) {
  const bool labelled = !batch.labels.empty();
  if (labelled) {
    if (batch.labels.size() != batch.rows.size()) {
      throw ConfigError("batch has " + std::to_string(batch.rows.size()) + " rows and " +
                        std::to_string(batch.labels.size()) + " labels");
    }
    check_labels(batch, config);
  }
  const ModelParams view = params.alias(false);
  ForwardResult result;
  result.probs.resize(batch.size());
  result.attention.resize(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  detail::parallel_for(batch.size(), threads, [&](std::size_t i) {
    Tape tape(false);
    std::optional<int> label;
    if (labelled) label = batch.labels[i];
    const ExampleOutput out =
        forward_example(tape, view, config, batch.rows[i], label, rng.child(i), training);
    const auto p = out.probs.values();
    result.probs[i].assign(p.begin(), p.end());
    AttentionRecord& rec = result.attention[i];
    rec.pads = batch.rows[i].pad_mask;
    for (const auto& w : out.channels.scalar_weights) {
      if (w.defined()) rec.channels.emplace_back(w.values().begin(), w.values().end());
    }
    rec.predicted = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    rec.label = label;
    if (labelled) losses[i] = out.loss.item();
  });
  if (labelled && batch.size() > 0) {
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (double l : losses) total += l * inv_batch;
    result.loss = total + l2_penalty(params, config);
  }
  return result;
}

double loss_and_gradients(const EncodedBatch& batch, const ModelParams& params,
                          const ModelConfig& config, SeedStream rng, bool training,
                          Gradients& grads, std::size_t threads) {
  if (batch.size() == 0) throw ArgumentError("loss_and_gradients: empty batch");
  if (batch.labels.size() != batch.rows.size()) {
    throw ConfigError("every example needs a label to compute a loss");
  }
  check_labels(batch, config);

  const std::size_t n_examples = batch.size();
  const std::size_t n_chunks = std::min(n_examples, kMaxChunks);
  const double inv_batch = 1.0 / static_cast<double>(n_examples);
  const std::size_t vocab = params.embedding.dim(0);
  const std::size_t k = params.embedding.dim(1);

  struct ChunkResult {
    ModelParams leaves;
    // (token id, gradient row) pairs in example order
    std::vector<std::pair<int, std::vector<double>>> embedding_rows;
  };
  std::vector<ChunkResult> chunks(n_chunks);
  std::vector<double> losses(n_examples, 0.0);
  double l2_value = 0.0;

  detail::parallel_for(n_chunks, threads, [&](std::size_t c) {
    ChunkResult& chunk = chunks[c];
    chunk.leaves = params.alias(true);
    // Embedding gradients arrive row-sparse through the gathered inputs; the
    // dense buffer is only needed for an L2 term on the embeddings.
    if (!(c == 0 && config.l2_embeddings && config.l2 > 0.0)) {
      chunk.leaves.embedding = params.embedding.alias(false);
    }
    const std::size_t begin = c * n_examples / n_chunks;
    const std::size_t end = (c + 1) * n_examples / n_chunks;
    for (std::size_t i = begin; i < end; ++i) {
      Tape tape;
      const ExampleOutput out = forward_example(tape, chunk.leaves, config, batch.rows[i],
                                                batch.labels[i], rng.child(i), training);
      losses[i] = out.loss.item() * inv_batch;
      Tensor objective = scale(tape, out.loss, inv_batch);
      if (i == 0) {
        const Tensor penalty = l2_penalty(tape, chunk.leaves, config);
        l2_value = penalty.item();
        objective = add(tape, objective, penalty);
      }
      tape.backward(objective);
      const auto g = out.embedded.grad();
      const auto& ids = batch.rows[i].ids;
      for (std::size_t t = 0; t < ids.size(); ++t) {
        chunk.embedding_rows.emplace_back(ids[t],
                                          std::vector<double>(g.begin() + t * k, g.begin() + (t + 1) * k));
      }
    }
  });

  const auto names = params.named();
  grads.assign(names.size(), {});
  for (std::size_t p = 0; p < names.size(); ++p) grads[p].assign(names[p].tensor.size(), 0.0);
  for (const auto& chunk : chunks) {
    const auto leaves = chunk.leaves.named();
    for (std::size_t p = 0; p < leaves.size(); ++p) {
      if (!leaves[p].tensor.requires_grad()) continue;
      const auto g = leaves[p].tensor.grad();
      for (std::size_t j = 0; j < g.size(); ++j) grads[p][j] += g[j];
    }
  }
  // Embedding is always the first named parameter.
  auto& embedding_grad = grads.front();
  for (const auto& chunk : chunks) {
    for (const auto& [id, row] : chunk.embedding_rows) {
      const auto offset = static_cast<std::size_t>(id) * k;
      if (offset >= vocab * k) continue;
      for (std::size_t j = 0; j < k; ++j) embedding_grad[offset + j] += row[j];
    }
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return total + l2_value;
}

}  // namespace amcnn
