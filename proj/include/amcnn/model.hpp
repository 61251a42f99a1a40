#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amcnn/attention.hpp"
#include "amcnn/bilstm.hpp"
#include "amcnn/conv.hpp"
#include "amcnn/rng.hpp"
#include "amcnn/tensor.hpp"
#include "amcnn/text.hpp"

namespace amcnn {

struct ModelConfig {
  std::size_t hidden_size = 100;     // per LSTM direction
  std::size_t embedding_dim = 300;
  std::size_t channels = 3;
  AttentionMode mode = AttentionMode::combined;
  SumAxis sum_axis = SumAxis::column;
  std::size_t attention_hidden = 0;  // 0 means 2 * hidden_size
  std::vector<double> keep_probs = {0.8};  // one value for all channels, or one per channel
  std::vector<std::size_t> filter_widths = {3, 4, 5};
  std::size_t filter_maps = 100;     // per width
  std::size_t classes = 2;
  double dropout_embedding = 0.5;
  double dropout_cnn_input = 0.5;
  double dropout_penultimate = 0.5;
  double l2 = 0.0005;
  bool l2_biases = false;
  bool l2_embeddings = false;
  std::size_t max_len = 0;           // 0 means the longest training sentence
  std::uint64_t seed = 1;

  double keep_prob(std::size_t channel) const;
  std::size_t attention_size() const;
  std::size_t feature_count() const { return filter_widths.size() * filter_maps; }
  /// Throws ConfigError. With check_len, also requires max_len to fit every filter.
  void validate(bool check_len = false) const;
};

enum class ParamKind { weight, bias, embedding };

struct NamedTensor {
  std::string name;
  Tensor tensor;
  ParamKind kind = ParamKind::weight;
};

struct ModelParams {
  Tensor embedding;  // V x k
  BiLstmParams encoder;
  std::vector<ChannelParams> channels;
  std::vector<ConvBank> conv;
  ClassifierHead head;

  /// Random initialization; `embedding` comes from init_embeddings.
  static ModelParams init(const ModelConfig& config, Tensor embedding, SeedStream rng);
  /// Correctly shaped all-zero parameters, e.g. as a load target.
  static ModelParams zeros(const ModelConfig& config, std::size_t vocab_size);

  /// Every trainable tensor in a fixed order. The handles share storage
  /// with this object. Parameters the attention mode does not use are absent.
  std::vector<NamedTensor> named() const;
  /// Same storage, fresh leaves: each with its own gradient buffer when
  /// requires_grad, or none at all.
  ModelParams alias(bool requires_grad) const;
  ModelParams clone() const;
};

/// Inverted dropout: zero each element with probability `rate` and scale the
/// survivors by 1 / (1 - rate). Identity when not training or rate is 0.
Tensor apply_dropout(Tape& tape, const Tensor& x, double rate, Rng& rng, bool training);

/// lambda / 2 * sum of squared weights. Biases and the embedding matrix only
/// count when the config opts in.
double l2_penalty(const ModelParams& params, const ModelConfig& config);
Tensor l2_penalty(Tape& tape, const ModelParams& params, const ModelConfig& config);

struct ExampleOutput {
  Tensor embedded;  // n x k rows gathered from the embedding matrix
  Tensor probs;
  Tensor loss;      // undefined when no label was given
  ChannelSet channels;
};

/// Full pipeline for one encoded sentence: embed, Bi-LSTM, attention
/// channels, convolution and pooling, softmax head, cross-entropy.
ExampleOutput forward_example(Tape& tape, const ModelParams& params, const ModelConfig& config,
                              const EncodedRow& row, std::optional<int> label, SeedStream rng,
                              bool training);

struct AttentionRecord {
  std::vector<std::string> tokens;
  std::vector<bool> pads;
  std::vector<std::vector<double>> channels;  // scalar weights, one list per channel
  int predicted = 0;
  std::optional<int> label;
};

struct ForwardResult {
  double loss = 0.0;  // mean cross-entropy + L2; 0 when the batch has no labels
  std::vector<std::vector<double>> probs;
  std::vector<AttentionRecord> attention;
};

/// Example i draws its randomness from rng.child(i).
ForwardResult forward(const EncodedBatch& batch, const ModelParams& params,
                      const ModelConfig& config, SeedStream rng, bool training,
                      std::size_t threads = 1);

/// Gradient buffers aligned with ModelParams::named().
using Gradients = std::vector<std::vector<double>>;

/// Loss of forward() and its gradient. Examples are split into a fixed
/// number of chunks that may run concurrently; chunk results are reduced in
/// chunk order, so the result does not depend on `threads`.
double loss_and_gradients(const EncodedBatch& batch, const ModelParams& params,
                          const ModelConfig& config, SeedStream rng, bool training,
                          Gradients& grads, std::size_t threads = 1);

void check_labels(const EncodedBatch& batch, const ModelConfig& config);

}  // namespace amcnn
