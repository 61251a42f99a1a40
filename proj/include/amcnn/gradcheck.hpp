#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "amcnn/model.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn {

struct GradCheckEntry {
  std::string name;
  std::size_t count = 0;  // elements compared
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  bool passed() const;
  double max_rel_error() const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor in |a - n| / max(|a|, |n|, floor). Keeps entries whose
  /// true gradient is zero from turning rounding noise into large ratios.
  double floor = 1e-6;
  std::size_t threads = 1;
};

double relative_error(double analytic, double numeric, double floor);

/// Central differences of an arbitrary scalar function of `leaves` against
/// its tape gradient. `fn` must build the same graph on every call.
GradCheckReport check_gradients(std::vector<Tensor> leaves,
                                const std::function<Tensor(Tape&)>& fn,
                                const GradCheckOptions& options = {});

/// Every model parameter checked on the evaluation path of `config`.
GradCheckReport grad_check(const ModelConfig& config, const ModelParams& params,
                           const EncodedBatch& batch, const GradCheckOptions& options = {});

/// The small model used for gradient checks: n=7, d=4, k=5, L=2, widths
/// {2,3} with 3 maps each, 3 classes, no dropout.
ModelConfig tiny_config(AttentionMode mode = AttentionMode::combined, std::size_t channels = 2);

/// Random ids and labels; a random number of leading positions are padding.
EncodedBatch random_batch(std::size_t size, std::size_t len, std::size_t vocab_size,
                          std::size_t classes, SeedStream rng);

/// tiny_config model with random embeddings and a random 4-example batch.
GradCheckReport tiny_grad_check(const ModelConfig& config, const GradCheckOptions& options = {});

}  // namespace amcnn
