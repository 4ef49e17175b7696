// SPDX-License-Identifier: Apache-2.0
#include "pgformer/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "pgformer/config.hpp"
#include "pgformer/errors.hpp"

namespace pgformer {

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

void require_comparable(const Scene& pred, const Scene& gt) {
  if (pred.person_count() != gt.person_count() || pred.persons.empty()) {
    throw DimensionError("scenes differ in person count: " + std::to_string(pred.person_count()) + " vs " +
                         std::to_string(gt.person_count()));
  }
  for (std::size_t p = 0; p < pred.person_count(); ++p) {
    if (pred.persons[p].frames.shape() != gt.persons[p].frames.shape()) {
      throw DimensionError("person " + std::to_string(p) + " shapes differ: " + pred.persons[p].frames.shape_string() +
                           " vs " + gt.persons[p].frames.shape_string());
    }
  }
}

double joint_distance(const Tensor& a, const Tensor& b, std::size_t t, std::size_t j) {
  const double dx = a.at3(t, j, 0) - b.at3(t, j, 0);
  const double dy = a.at3(t, j, 1) - b.at3(t, j, 1);
  const double dz = a.at3(t, j, 2) - b.at3(t, j, 2);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<double> frame_errors(const Scene& pred, const Scene& gt) {
  const std::size_t frames = gt.frame_count(), joints = gt.joint_count();
  std::vector<double> out(frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (std::size_t p = 0; p < gt.person_count(); ++p)
      for (std::size_t j = 0; j < joints; ++j) acc += joint_distance(pred.persons[p].frames, gt.persons[p].frames, t, j);
    out[t] = acc / static_cast<double>(gt.person_count() * joints);
  }
  return out;
}

std::vector<double> at_horizons(const std::vector<double>& per_frame, double fps, const std::vector<double>& horizons) {
  std::vector<double> out;
  for (double h : horizons) out.push_back(per_frame[horizon_frame(h, fps, per_frame.size()) - 1]);
  return out;
}

Tensor root_centred(const Tensor& frames, const Skeleton& skeleton) {
  Tensor out = frames;
  const std::size_t roots = skeleton.root_joints.size();
  for (std::size_t t = 0; t < frames.dim(0); ++t) {
    double c[3] = {0, 0, 0};
    for (std::size_t r : skeleton.root_joints)
      for (std::size_t a = 0; a < 3; ++a) c[a] += frames.at3(t, r, a);
    for (std::size_t j = 0; j < frames.dim(1); ++j)
      for (std::size_t a = 0; a < 3; ++a) out.at3(t, j, a) -= c[a] / static_cast<double>(roots);
  }
  return out;
}

}  // namespace

std::size_t horizon_frame(double horizon_s, double fps, std::size_t available_frames) {
  if (!(horizon_s > 0.0) || !(fps > 0.0)) throw ConfigError("horizons and fps must be positive");
  const double f = std::round(horizon_s * fps);
  if (f < 1.0) {
    throw ConfigError("horizon " + format_double(horizon_s) + " s is shorter than one frame at " + format_double(fps) +
                      " fps");
  }
  const auto frame = static_cast<std::size_t>(f);
  if (frame > available_frames) {
    throw ConfigError("horizon " + format_double(horizon_s) + " s needs frame " + std::to_string(frame) +
                      " but only " + std::to_string(available_frames) + " frames were predicted");
  }
  return frame;
}

std::vector<double> jme_per_frame(const Scene& pred, const Scene& gt, const Skeleton& skeleton) {
  require_comparable(pred, gt);
  const RigidTransform tf = canonical_transform(gt, 0, skeleton);
  return frame_errors(tf.apply(pred), tf.apply(gt));
}

std::vector<double> jme(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                        const std::vector<double>& horizons) {
  return at_horizons(jme_per_frame(pred, gt, skeleton), gt.fps(), horizons);
}

Tensor procrustes_align(const Tensor& pred, const Tensor& gt, bool similarity) {
  if (pred.rank() != 2 || pred.cols() != 3 || pred.shape() != gt.shape()) {
    throw DimensionError("procrustes_align expects matching [J x 3] inputs, got " + pred.shape_string() + " and " +
                         gt.shape_string());
  }
  const std::size_t j = pred.rows();
  Points x(j, 3), y(j, 3);
  for (std::size_t r = 0; r < j; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      x(r, c) = pred(r, c);
      y(r, c) = gt(r, c);
    }
  const Eigen::RowVector3d mx = x.colwise().mean(), my = y.colwise().mean();
  const Points xc = x.rowwise() - mx, yc = y.rowwise() - my;

  const Eigen::Matrix3d h = xc.transpose() * yc;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double scale_ref = std::max(xc.norm() * yc.norm(), 1e-300);
  if (j < 3 || s(1) <= 1e-12 * scale_ref) {
    throw AlignmentError("procrustes_align: point set of " + std::to_string(j) + " joints is degenerate (rank < 2)");
  }
  // Points are rows, so the fit is x_c R ~= y_c with R = U D V^T.
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixU() * d * svd.matrixV().transpose();
  double scale = 1.0;
  if (similarity) {
    const double denom = xc.squaredNorm();
    scale = (s.asDiagonal() * d).trace() / denom;
  }
  const Points aligned = ((scale * xc) * rot).rowwise() + my;
  Tensor out({j, 3});
  for (std::size_t r = 0; r < j; ++r)
    for (std::size_t c = 0; c < 3; ++c) out(r, c) = aligned(r, c);
  return out;
}

std::vector<double> ame_per_frame(const Scene& pred, const Scene& gt, const Skeleton& skeleton, bool similarity) {
  require_comparable(pred, gt);
  const std::size_t frames = gt.frame_count(), joints = gt.joint_count();
  std::vector<double> out(frames, 0.0);
  for (std::size_t p = 0; p < gt.person_count(); ++p) {
    const Tensor pc = root_centred(pred.persons[p].frames, skeleton);
    const Tensor gc = root_centred(gt.persons[p].frames, skeleton);
    for (std::size_t t = 0; t < frames; ++t) {
      Tensor pf({joints, 3}), gf({joints, 3});
      std::copy_n(pc.raw() + t * joints * 3, joints * 3, pf.raw());
      std::copy_n(gc.raw() + t * joints * 3, joints * 3, gf.raw());
      const Tensor aligned = procrustes_align(pf, gf, similarity);
      for (std::size_t j = 0; j < joints; ++j) {
        const double dx = aligned(j, 0) - gf(j, 0), dy = aligned(j, 1) - gf(j, 1), dz = aligned(j, 2) - gf(j, 2);
        out[t] += std::sqrt(dx * dx + dy * dy + dz * dz);
      }
    }
  }
  for (double& v : out) v /= static_cast<double>(gt.person_count() * joints);
  return out;
}

std::vector<double> ame(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                        const std::vector<double>& horizons, bool similarity) {
  return at_horizons(ame_per_frame(pred, gt, skeleton, similarity), gt.fps(), horizons);
}

std::vector<double> mpjpe_per_frame(const Scene& pred, const Scene& gt) {
  require_comparable(pred, gt);
  return frame_errors(pred, gt);
}

Tensor per_joint_errors(const Scene& pred, const Scene& gt, const Skeleton& skeleton) {
  require_comparable(pred, gt);
  const RigidTransform tf = canonical_transform(gt, 0, skeleton);
  const Scene pc = tf.apply(pred), gc = tf.apply(gt);
  const std::size_t frames = gt.frame_count(), joints = gt.joint_count();
  Tensor out({gt.person_count(), joints});
  for (std::size_t p = 0; p < gt.person_count(); ++p)
    for (std::size_t j = 0; j < joints; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < frames; ++t) acc += joint_distance(pc.persons[p].frames, gc.persons[p].frames, t, j);
      out(p, j) = acc / static_cast<double>(frames);
    }
  return out;
}

void MetricReport::validate() const {
  for (std::size_t i = 1; i < horizons.size(); ++i) {
    if (!(horizons[i] > horizons[i - 1])) throw ConfigError("metric horizons must be strictly increasing");
  }
  for (const auto* v : {&jme, &ame, &mpjpe}) {
    if (!v->empty() && v->size() != horizons.size()) throw DimensionError("metric report columns differ in length");
    for (double x : *v)
      if (!(x >= 0.0)) throw ContractError("metric report holds a negative or NaN value");
  }
}

MetricReport evaluate_scene(const Scene& pred, const Scene& gt, const Skeleton& skeleton,
                            const std::vector<double>& horizons, bool similarity) {
  MetricReport r;
  r.horizons = horizons;
  const std::vector<double> raw = mpjpe_per_frame(pred, gt);
  r.jme = jme(pred, gt, skeleton, horizons);
  r.ame = ame(pred, gt, skeleton, horizons, similarity);
  for (double h : horizons) {
    const std::size_t f = horizon_frame(h, gt.fps(), raw.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < f; ++i) acc += raw[i];
    r.mpjpe.push_back(acc / static_cast<double>(f));
  }
  r.per_joint = per_joint_errors(pred, gt, skeleton);
  r.validate();
  return r;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw ContractError("average_reports: nothing to average");
  MetricReport out = reports.front();
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const MetricReport& r = reports[i];
    if (r.horizons != out.horizons || r.per_joint.shape() != out.per_joint.shape()) {
      throw DimensionError("average_reports: reports differ in horizons or joints");
    }
    for (std::size_t h = 0; h < out.horizons.size(); ++h) {
      out.jme[h] += r.jme[h];
      out.ame[h] += r.ame[h];
      out.mpjpe[h] += r.mpjpe[h];
    }
    out.per_joint += r.per_joint;
  }
  const double n = static_cast<double>(reports.size());
  for (std::size_t h = 0; h < out.horizons.size(); ++h) {
    out.jme[h] /= n;
    out.ame[h] /= n;
    out.mpjpe[h] /= n;
  }
  for (auto& v : out.per_joint.values()) v /= n;
  return out;
}

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows, bool with_jme,
                                bool with_ame) {
  if (rows.empty()) return {};
  const auto& horizons = rows.front().second.horizons;
  std::string out;
  char cell[64];
  auto block = [&](const char* title, auto pick) {
    out += title;
    out += "\n";
    std::snprintf(cell, sizeof(cell), "%-16s", "sequence");
    out += cell;
    for (double h : horizons) {
      std::snprintf(cell, sizeof(cell), " %9.2fs", h);
      out += cell;
    }
    out += "\n";
    for (const auto& [name, report] : rows) {
      std::snprintf(cell, sizeof(cell), "%-16s", name.c_str());
      out += cell;
      for (double v : pick(report)) {
        std::snprintf(cell, sizeof(cell), " %10.1f", v);
        out += cell;
      }
      out += "\n";
    }
  };
  if (with_jme) block("JME (mm)", [](const MetricReport& r) { return r.jme; });
  if (with_ame) {
    if (with_jme) out += "\n";
    block("AME (mm)", [](const MetricReport& r) { return r.ame; });
  }
  return out;
}

std::string format_metric_records(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::string out = "sequence,horizon_s,jme_mm,ame_mm,mpjpe_mm\n";
  for (const auto& [name, r] : rows)
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      out += name + "," + format_double(r.horizons[h]) + "," + format_double(r.jme[h]) + "," +
             format_double(r.ame[h]) + "," + format_double(r.mpjpe[h]) + "\n";
    }
  return out;
}

std::string format_per_joint_csv(const MetricReport& report, const Skeleton& skeleton) {
  std::string out = "person,joint,name,error_mm\n";
  for (std::size_t p = 0; p < report.per_joint.rows(); ++p)
    for (std::size_t j = 0; j < report.per_joint.cols(); ++j) {
      const std::string name = j < skeleton.joint_count() ? skeleton.joint_names[j] : "";
      out += std::to_string(p) + "," + std::to_string(j) + "," + name + "," + format_double(report.per_joint(p, j)) +
             "\n";
    }
  return out;
}

}  // namespace pgformer
