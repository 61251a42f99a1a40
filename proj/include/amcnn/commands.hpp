#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace amcnn {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // gradient check over tolerance, unexpected errors
  kExitConfig = 2,
  kExitData = 3,
  kExitShape = 4,
  kExitIo = 5,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> data;
  std::optional<double> tolerance;
};

/// Each command reports failures as a single line on `err` and returns an
/// ExitCode; none of them throw.
int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_predict(const CommandOptions& options, std::istream& in, std::ostream& out,
                std::ostream& err);
int cmd_gradcheck(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_inspect_attention(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Parses `args` (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace amcnn
