#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "amcnn/model.hpp"
#include "amcnn/optim.hpp"
#include "amcnn/text.hpp"

namespace amcnn {

struct TrainConfig {
  ModelConfig model;
  AdamOptions adam;
  std::size_t batch_size = 50;
  std::size_t epochs = 25;
  std::size_t threads = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

/// {"epoch":..,"train_loss":..,"dev_accuracy":..} on one line.
std::string to_json_line(const EpochMetrics& m);

/// Fraction of examples whose argmax prediction equals the label, computed
/// on the deterministic evaluation path.
double evaluate(const ModelParams& params, const EncodedBatch& data, const ModelConfig& config,
                std::size_t threads = 1);

/// Epoch-at-a-time training with Adam over shuffled mini-batches, tracking
/// the parameters with the best dev accuracy so far.
class Trainer {
 public:
  Trainer(TrainConfig config, ModelParams initial, EncodedBatch train, EncodedBatch dev);

  EpochMetrics run_epoch();

  const ModelParams& params() const { return params_; }
  const ModelParams& best_params() const { return best_params_; }
  std::size_t best_epoch() const { return best_epoch_; }
  const std::vector<EpochMetrics>& metrics() const { return metrics_; }

 private:
  TrainConfig config_;
  ModelParams params_;
  ModelParams best_params_;
  EncodedBatch train_;
  EncodedBatch dev_;
  AdamState adam_;
  std::vector<EpochMetrics> metrics_;
  std::size_t best_epoch_ = 0;
  double best_accuracy_ = -1.0;
  std::uint64_t step_ = 0;
};

struct TrainResult {
  ModelParams params;  // best dev accuracy
  std::vector<EpochMetrics> metrics;
  std::size_t best_epoch = 0;
};

TrainResult train(const TrainConfig& config, const ModelParams& initial,
                  const EncodedBatch& train_data, const EncodedBatch& dev_data);

}  // namespace amcnn
