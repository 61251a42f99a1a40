#include "amcnn/train.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "amcnn/errors.hpp"

namespace amcnn {
namespace {

EncodedBatch select(const EncodedBatch& data, std::span<const std::size_t> indices) {
  EncodedBatch out;
  out.len = data.len;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(data.rows[i]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

}  // namespace

std::string to_json_line(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["dev_accuracy"] = m.dev_accuracy;
  return j.dump();
}

double evaluate(const ModelParams& params, const EncodedBatch& data, const ModelConfig& config,
                std::size_t threads) {
  if (data.size() == 0) return 0.0;
  EncodedBatch unlabelled{data.len, data.rows, {}};
  const ForwardResult result = forward(unlabelled, params, config, SeedStream(0), false, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (result.attention[i].predicted == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Trainer::Trainer(TrainConfig config, ModelParams initial, EncodedBatch train, EncodedBatch dev)
    : config_(std::move(config)),
      params_(initial.clone()),
      best_params_(params_.clone()),
      train_(std::move(train)),
      dev_(std::move(dev)) {
  if (train_.size() == 0) throw ArgumentError("train: empty training data");
  if (config_.batch_size == 0) throw ConfigError("batch_size must be positive");
  config_.model.validate();
  check_labels(train_, config_.model);
  check_labels(dev_, config_.model);
}

EpochMetrics Trainer::run_epoch() {
  const std::size_t epoch = metrics_.size() + 1;
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle_rng = substream(config_.model.seed, Stream::shuffle).child(epoch).engine();
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const SeedStream dropout = substream(config_.model.seed, Stream::dropout);
  auto named = params_.named();
  Gradients grads;
  double weighted_loss = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    const EncodedBatch batch =
        select(train_, std::span<const std::size_t>(order).subspan(begin, end - begin));
    const double loss = loss_and_gradients(batch, params_, config_.model, dropout.child(step_++),
                                           true, grads, config_.threads);
    weighted_loss += loss * static_cast<double>(end - begin);
    adam_step(named, grads, adam_, config_.adam);
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.train_loss = weighted_loss / static_cast<double>(order.size());
  m.dev_accuracy = evaluate(params_, dev_, config_.model, config_.threads);
  if (m.dev_accuracy > best_accuracy_) {
    best_accuracy_ = m.dev_accuracy;
    best_epoch_ = epoch;
    best_params_ = params_.clone();
  }
  metrics_.push_back(m);
  return m;
}

TrainResult train(const TrainConfig& config, const ModelParams& initial,
                  const EncodedBatch& train_data, const EncodedBatch& dev_data) {
  Trainer trainer(config, initial, train_data, dev_data);
  for (std::size_t e = 0; e < config.epochs; ++e) trainer.run_epoch();
  return {trainer.best_params(), trainer.metrics(), trainer.best_epoch()};
}

}  // namespace amcnn
