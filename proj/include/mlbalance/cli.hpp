#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlbalance/aemlo.hpp"

namespace mlbalance {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitNothingToSample = 4;
inline constexpr int kExitStarvation = 5;

/// Everything a subcommand needs. Serialized as a flat JSON object whose keys mirror the
/// long flag names with '-' replaced by '_'.
struct RunConfig {
  std::string input;
  std::string labels;  // MULAN XML file, or a comma-separated list of label names
  long long label_count = 0;
  std::string format;  // "arff" or "csv"; empty means infer from the input extension
  std::string out;
  std::string model;
  std::string test;

  std::string sampler = "aemlo";
  std::string classifier = "br";
  int k = 10;
  int smote_k = 5;
  double val_frac = 0.2;
  double test_frac = 0.0;
  std::uint64_t seed = 0;

  double p = 0.3;
  double imr_threshold = 10.0;
  long long max_attempts = 0;

  TrainConfig train;

  int br_epochs = 1000;
  double br_reg = 1e-3;

  nlohmann::json to_json() const;
  /// Overwrites only the keys present in `j`. A nested "config" object is unwrapped first,
  /// so any emitted report can be replayed.
  void merge_json(const nlohmann::json& j);
};

/// Runs one CLI invocation. `args` excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlbalance
