// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pgformer/training.hpp"

namespace pgformer {

/// T=8, K=4, J=4, D=16, L=2, M=2, H=2, d_h=8.
PGformerConfig tiny_config();

struct GradcheckOptions {
  double step = 1e-6;
  double tolerance = 1e-5;
  std::size_t epoch = 0;
  TrainConfig train;
  /// Runs between backward and the comparison; tests use it to corrupt gradients.
  std::function<void(ParameterStore&)> after_backward;
};

struct GroupCheck {
  std::string group;
  std::size_t entries = 0;
  double relative_error = 0;  ///< ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GroupCheck> groups;
  double max_relative_error = 0;
  bool passed = false;
};

/// Compares total-loss gradients with central differences for every trainable
/// parameter of `model` on one prepared sample.
GradcheckReport gradcheck(PGformer& model, const PreparedSample& sample, const GradcheckOptions& options = {});

std::string format_gradcheck_report(const GradcheckReport& report);

}  // namespace pgformer
