#include "amcnn/optim.hpp"

#include <cmath>

#include "amcnn/errors.hpp"

namespace amcnn {

void adam_step(std::span<NamedTensor> params, const Gradients& grads, AdamState& state,
               const AdamOptions& options) {
  if (grads.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::size_t n = params[p].tensor.size();
    if (grads[p].size() != n || state.first_moment[p].size() != n ||
        state.second_moment[p].size() != n) {
      throw DimensionError("adam_step: size mismatch for " + params[p].name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].tensor.mutable_values();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    const auto& g = grads[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
  }
}

}  // namespace amcnn
