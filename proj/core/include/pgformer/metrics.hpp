// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pgformer/pose.hpp"

namespace pgformer {

/// Paper-style horizon set in seconds.
inline const std::vector<double> kDefaultHorizons{0.2, 0.4, 0.6, 1.0};

/// One-based frame index round(h * fps) into a predicted segment.
std::size_t horizon_frame(double horizon_s, double fps, std::size_t available_frames);

/// Per-frame JME: both scenes go through one rigid transform (the ground-truth
/// leader's canonical frame), then MPJPE over every person and joint.
std::vector<double> jme_per_frame(const Scene& pred, const Scene& gt, const Skeleton& skeleton);
std::vector<double> jme(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                        const std::vector<double>& horizons);

/// Rigid (or, with `similarity`, scaled) Procrustes fit of pred [J x 3] onto gt.
Tensor procrustes_align(const Tensor& pred, const Tensor& gt, bool similarity = false);

/// Per-frame AME: root-centre each person, align per frame, then MPJPE.
std::vector<double> ame_per_frame(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                                  bool similarity = false);
std::vector<double> ame(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                        const std::vector<double>& horizons, bool similarity = false);

/// Raw per-frame MPJPE over every person and joint.
std::vector<double> mpjpe_per_frame(const Scene& pred, const Scene& gt);

/// Mean error per person and joint over all frames: [n x J].
Tensor per_joint_errors(const Scene& pred, const Scene& gt, const Skeleton& skeleton);

struct MetricReport {
  std::vector<double> horizons;
  std::vector<double> jme;
  std::vector<double> ame;
  std::vector<double> mpjpe;  ///< mean raw MPJPE over frames 1..horizon
  Tensor per_joint;           ///< [n x J]

  void validate() const;
};

MetricReport evaluate_scene(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                            const std::vector<double>& horizons, bool similarity = false);

/// Element-wise mean of reports with identical horizons.
MetricReport average_reports(const std::vector<MetricReport>& reports);

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows, bool with_jme = true,
                                bool with_ame = true);
std::string format_metric_records(const std::vector<std::pair<std::string, MetricReport>>& rows);
std::string format_per_joint_csv(const MetricReport& report, const Skeleton& skeleton);

}  // namespace pgformer
