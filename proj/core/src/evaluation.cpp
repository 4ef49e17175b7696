// SPDX-License-Identifier: Apache-2.0
#include "pgformer/evaluation.hpp"

#include <algorithm>
#include <map>

#include "pgformer/errors.hpp"

namespace pgformer {

EvaluationResult evaluate_model(const PGformer& model, const std::vector<MotionSequence>& sequences,
                                const Skeleton& skeleton, const EvaluationOptions& options) {
  const PGformerConfig& cfg = model.config();
  if (skeleton.joint_count() != cfg.joints) {
    throw DimensionError("skeleton mismatch: model expects J=" + std::to_string(cfg.joints) + ", data has J=" +
                         std::to_string(skeleton.joint_count()));
  }
  if (options.horizons.empty()) throw ConfigError("evaluation needs at least one horizon");
  const double max_h = *std::max_element(options.horizons.begin(), options.horizons.end());
  const std::size_t span = horizon_frame(max_h, cfg.fps, static_cast<std::size_t>(-1));
  const std::size_t stride = options.stride == 0 ? span : options.stride;

  EvaluationResult result;
  std::map<std::string, std::vector<MetricReport>> grouped;
  std::vector<MetricReport> all;
  for (const auto& seq : sequences) {
    if (seq.scene.joint_count() != cfg.joints) {
      throw DimensionError("sequence '" + seq.name + "' has J=" + std::to_string(seq.scene.joint_count()) +
                           ", model expects J=" + std::to_string(cfg.joints));
    }
    for (const Sample& w : make_windows(seq.scene, cfg.input_frames, span, stride)) {
      Scene pred;
      if (options.identity) {
        pred = w.future;
      } else {
        Forecast f = model.predict_recursive(w.history, span, skeleton);
        result.model_passes += f.passes;
        pred = std::move(f.frames);
      }
      MetricReport r = evaluate_scene(pred, w.future, skeleton, options.horizons, options.similarity);
      const std::vector<double> per_frame = jme_per_frame(pred, w.future, skeleton);
      if (result.jme_per_frame.empty()) result.jme_per_frame.assign(per_frame.size(), 0.0);
      for (std::size_t i = 0; i < per_frame.size(); ++i) result.jme_per_frame[i] += per_frame[i];
      grouped[seq.label.empty() ? "all" : seq.label].push_back(r);
      all.push_back(std::move(r));
    }
  }
  if (all.empty()) {
    throw ContractError("no sequence is long enough for a " + std::to_string(cfg.input_frames) + "+" +
                        std::to_string(span) + " frame evaluation window");
  }
  result.windows = all.size();
  for (double& v : result.jme_per_frame) v /= static_cast<double>(all.size());
  for (const auto& [label, reports] : grouped) result.by_label.emplace_back(label, average_reports(reports));
  result.overall = average_reports(all);
  return result;
}

}  // namespace pgformer
