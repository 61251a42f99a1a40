#pragma once

#include <filesystem>

#include "amcnn/model.hpp"
#include "amcnn/text.hpp"

namespace amcnn {

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ModelParams params;
};

/// Binary layout: the 6 bytes "AMCNN1", a little-endian uint64 header
/// length, a UTF-8 JSON header {format_version, config, vocab, tensors:
/// [{name, shape}]}, then every tensor as little-endian IEEE doubles in
/// header order. Written through a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const ModelConfig& config, const Vocabulary& vocab);

/// Throws FormatError on a bad magic, version, header, tensor list or
/// length; nothing partial is returned.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace amcnn
