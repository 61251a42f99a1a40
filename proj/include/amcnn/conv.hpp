#pragma once

#include <cstddef>
#include <vector>

#include "amcnn/rng.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn {

/// All filters of one width. Row j of `weights` is filter j, flattened as
/// [window offset][channel][hidden dim], i.e. width * channels * dim values;
/// a filter therefore sums its response over every channel.
struct ConvBank {
  std::size_t width = 0;
  Tensor weights;  // maps x (width * channels * dim)
  Tensor bias;     // maps

  std::size_t maps() const { return bias.dim(0); }
};

/// Valid (unpadded) convolution of every filter in the bank over the L
/// channels, followed by relu. Column j of the [(n - width + 1) x maps]
/// result is filter j's feature map.
Tensor conv_forward(Tape& tape, const std::vector<Tensor>& channels, const ConvBank& bank);

/// Max over time: a feature map vector reduces to [1], a feature map matrix
/// to one maximum per column. Ties go to the first position.
Tensor max_pool(Tape& tape, const Tensor& feature_maps);

struct ClassifierHead {
  Tensor weight;  // c x s
  Tensor bias;    // c
};

/// softmax(W r + b)
Tensor classify(Tape& tape, const Tensor& features, const ClassifierHead& head);

}  // namespace amcnn
