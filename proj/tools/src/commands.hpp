#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sgldreg::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kNumeric = 3 };

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides data.output_dir
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct RegisterOptions {
  std::filesystem::path store;
  std::filesystem::path moving;
  std::filesystem::path fixed;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  bool pgm = false;
};

struct EvaluateOptions {
  std::filesystem::path store;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out;
  std::optional<std::filesystem::path> baseline_csv;
  std::string split = "test";
};

struct UncertaintyOptionsCli {
  std::filesystem::path store;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out;
  std::vector<double> sigmas;
  std::uint64_t seed = 0;
  std::string split = "test";
  std::size_t max_pairs = 0;  // 0 = all
};

struct GenerateOptions {
  std::filesystem::path out;
  std::size_t count = 20;
  std::uint64_t seed = 0;
  std::string family = "blobs";
  std::vector<std::size_t> grid{64, 64};
  std::size_t labels = 4;
  double max_displacement = 11.0;
  double smoothness = 10.0;
};

// Each command reports progress on `log` and problems on `err`, and maps
// failures to the exit codes above instead of throwing.
int cmd_train(const TrainOptions& options, std::ostream& log, std::ostream& err);
int cmd_register(const RegisterOptions& options, std::ostream& log, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& log, std::ostream& err);
int cmd_uncertainty(const UncertaintyOptionsCli& options, std::ostream& log, std::ostream& err);
int cmd_generate(const GenerateOptions& options, std::ostream& log, std::ostream& err);

/// Parses argv and dispatches.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace sgldreg::cli
