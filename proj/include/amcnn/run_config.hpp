#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "amcnn/train.hpp"

namespace amcnn {

/// Everything a command needs: model and optimizer settings plus paths.
struct RunConfig {
  TrainConfig train;
  std::size_t min_freq = 1;
  double dev_fraction = 0.1;  // held out of train_file when dev_file is empty
  std::filesystem::path train_file;
  std::filesystem::path dev_file;
  std::filesystem::path test_file;
  std::filesystem::path pretrained;
  std::filesystem::path checkpoint;
  std::filesystem::path output_dir = ".";
};

/// Flat "key = value" lines; '#' starts a comment. Relative paths are
/// resolved against `base_dir`. Unknown keys and bad values throw ConfigError
/// naming `source` and the line.
RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies one setting as if it appeared in a file.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

/// Keys accepted by apply_setting, in documentation order.
const std::vector<std::string>& run_config_keys();

}  // namespace amcnn
