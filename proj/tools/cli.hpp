// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgformer/model.hpp"
#include "pgformer/training.hpp"

namespace pgformer::cli {

/// Everything one run needs, read from a flat `key = value` file.
///
/// Model and training keys are those of PGformerConfig and TrainConfig; the
/// remaining keys are listed in to_text(). Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
  PGformerConfig model;
  TrainConfig train;
  std::string data;
  std::string test_data;  ///< when empty, `data` is split into train/test
  std::string out = "pgformer-run";
  std::vector<std::uint64_t> seeds{0};
  std::string split = "common";
  double test_fraction = 0.25;
  std::vector<std::string> test_labels;
  std::size_t stride = 1;       ///< training window stride
  std::size_t eval_stride = 0;  ///< 0: one evaluation window per horizon span
  std::vector<double> horizons{0.2, 0.4, 0.6, 1.0};
  double max_horizon = 1.0;
  std::string metric = "both";
  std::vector<std::string> variants;
  bool similarity = false;

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& base_dir = {});
  std::string to_text() const;
  void validate() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Names accepted by `ablate --variants`.
const std::vector<std::string>& variant_names();
/// Applies an ablation variant to a base model config.
PGformerConfig apply_variant(PGformerConfig base, const std::string& variant);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pgformer::cli
