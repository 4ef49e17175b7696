// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pgformer/data.hpp"
#include "pgformer/metrics.hpp"
#include "pgformer/model.hpp"

namespace pgformer {

struct EvaluationOptions {
  std::vector<double> horizons = kDefaultHorizons;
  std::size_t stride = 0;   ///< window stride; 0 means one window per horizon span
  bool similarity = false;  ///< scaled Procrustes for AME
  bool identity = false;    ///< score the ground truth against itself
};

struct EvaluationResult {
  std::vector<std::pair<std::string, MetricReport>> by_label;  ///< sorted by label
  MetricReport overall;                                        ///< mean over every window
  std::vector<double> jme_per_frame;                           ///< mean over windows
  std::size_t windows = 0;
  std::size_t model_passes = 0;
};

/// Slides (T, horizon) windows over every sequence, forecasts recursively up
/// to the largest horizon and scores each window.
EvaluationResult evaluate_model(const PGformer& model, const std::vector<MotionSequence>& sequences,
                                const Skeleton& skeleton, const EvaluationOptions& options);

}  // namespace pgformer
