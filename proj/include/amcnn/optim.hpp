#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amcnn/model.hpp"

namespace amcnn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update, in place. Empty moment buffers are
/// created on the first call; `grads` must align with `params`.
void adam_step(std::span<NamedTensor> params, const Gradients& grads, AdamState& state,
               const AdamOptions& options);

}  // namespace amcnn
