#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "amcnn/rng.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn {

enum class AttentionMode { scalar, vectorial, combined };

/// Which index of the masked association matrix is summed to score word k.
/// column: s_k = sum_x A[x][k] (how much every word attends to k).
enum class SumAxis { column, row };

std::string to_string(AttentionMode mode);
AttentionMode parse_attention_mode(const std::string& text);
std::string to_string(SumAxis axis);
SumAxis parse_sum_axis(const std::string& text);

/// Score added to padded positions before the softmax.
inline constexpr double kPadSentinel = -99999.0;

struct ScalarAttentionParams {
  Tensor weight;  // 2d x 2d, bilinear association
  Tensor bias;    // [1]
  double keep_prob = 0.8;
};

struct VectorialAttentionParams {
  Tensor hidden_weight;  // a x 2d, projects h_i
  Tensor hidden_bias;    // a
  Tensor score_weight;   // a x 2d, maps sigma(...) to one score per hidden dimension
};

struct ChannelParams {
  ScalarAttentionParams scalar;
  VectorialAttentionParams vectorial;
};

/// The L channel matrices fed to the convolution, plus each channel's
/// scalar attention weights (kept for export; undefined in vectorial mode).
struct ChannelSet {
  std::vector<Tensor> channels;
  std::vector<Tensor> scalar_weights;
};

/// M[i][j] = tanh(h_i . (W h_j) + b), an n x n matrix.
Tensor association_matrix(Tape& tape, const Tensor& hidden, const Tensor& weight,
                          const Tensor& bias);

/// Training: i.i.d. Bernoulli(keep_prob) entries. Evaluation: every entry is
/// keep_prob, the mask's expectation.
Tensor sample_channel_mask(std::size_t n, double keep_prob, Rng& rng, bool training);

/// Weights a[n]: softmax over the summed masked associations, with the pad
/// sentinel added at padded positions.
Tensor scalar_attention(Tape& tape, const Tensor& association, const Tensor& mask,
                        const std::vector<bool>& pad_mask, SumAxis axis = SumAxis::column);

/// Weights A[n x 2d]: one score per position and hidden dimension,
/// softmax-normalized down each column.
Tensor vectorial_attention(Tape& tape, const Tensor& hidden, const VectorialAttentionParams& p);

/// Re-weights the rows of H in place order. Pass an undefined Tensor for
/// weights the mode does not use.
Tensor build_channel(Tape& tape, const Tensor& hidden, const Tensor& scalar_weights,
                     const Tensor& vector_weights, AttentionMode mode);

/// One channel per entry of `params`; channel l draws its mask from
/// rng.child(l).
ChannelSet build_channels(Tape& tape, const Tensor& hidden, const std::vector<bool>& pad_mask,
                          std::span<const ChannelParams> params, AttentionMode mode,
                          SumAxis axis, SeedStream rng, bool training);

}  // namespace amcnn
