#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Mean aligned Euclidean distances between a reconstruction and its ground
// truth, per joint, per frame, and overall.
struct ErrorReport {
  std::vector<std::string> joint_names;
  std::vector<double> per_joint_error;
  std::vector<double> per_frame_error;
  double mean_error = 0.0;
};

// Full Procrustes alignment of rec onto gt: translation, orthogonal
// transform (reflections allowed) and uniform scale, least-squares optimal.
// Returns the transformed rec and gt in gt's original frame.
inline std::pair<Eigen::MatrixX3d, Eigen::MatrixX3d> procrustes_align(const Pose3D& rec,
                                                                      const Pose3D& gt) {
  if (!same_topology(rec.topology, gt.topology))
    throw StructuralError("procrustes_align: topologies differ");

  const Eigen::RowVector3d rec_centroid = rec.coords.colwise().mean();
  const Eigen::RowVector3d gt_centroid = gt.coords.colwise().mean();
  const Eigen::MatrixX3d rec_c = rec.coords.rowwise() - rec_centroid;
  const Eigen::MatrixX3d gt_c = gt.coords.rowwise() - gt_centroid;

  {
    Eigen::JacobiSVD<Eigen::MatrixX3d> rank_check(gt_c);
    const auto& sv = rank_check.singularValues();
    if (sv(0) <= 0.0 || sv(1) <= 1e-10 * sv(0))
      throw FitError("procrustes_align: degenerate ground-truth pose (centered rank < 2)");
  }

  const double rec_norm2 = rec_c.squaredNorm();
  Eigen::MatrixX3d aligned;
  if (rec_norm2 == 0.0) {
    // Every rec joint sits at the centroid; nothing to rotate or scale.
    aligned = Eigen::MatrixX3d::Zero(rec.coords.rows(), 3);
  } else {
    const Eigen::Matrix3d cross = rec_c.transpose() * gt_c;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
    const double scale = svd.singularValues().sum() / rec_norm2;
    aligned = scale * (rec_c * q);
  }
  aligned.rowwise() += gt_centroid;
  return {std::move(aligned), gt.coords};
}

// Per-frame Procrustes alignment followed by per-joint distance averaging.
inline ErrorReport sequence_error(const PoseSequence3D& rec, const PoseSequence3D& gt) {
  if (!same_topology(rec.topology, gt.topology))
    throw StructuralError("sequence_error: topologies differ");
  if (rec.size() != gt.size())
    throw StructuralError("sequence_error: sequences differ in length (" +
                          std::to_string(rec.size()) + " vs " + std::to_string(gt.size()) + ")");

  const auto p = gt.topology->joint_count();
  const std::size_t n = gt.size();
  ErrorReport report;
  report.joint_names = gt.topology->joints;
  report.per_joint_error.assign(p, 0.0);
  report.per_frame_error.assign(n, 0.0);

  for (std::size_t t = 0; t < n; ++t) {
    const auto [aligned, reference] = procrustes_align(rec.pose(t), gt.pose(t));
    for (std::size_t j = 0; j < p; ++j) {
      const double d = (aligned.row(static_cast<Eigen::Index>(j)) -
                        reference.row(static_cast<Eigen::Index>(j)))
                           .norm();
      report.per_joint_error[j] += d;
      report.per_frame_error[t] += d;
    }
    report.per_frame_error[t] /= static_cast<double>(p);
  }
  for (auto& e : report.per_joint_error) e /= static_cast<double>(n);

  double sum = 0.0;
  for (const double e : report.per_joint_error) sum += e;
  report.mean_error = sum / static_cast<double>(p);
  return report;
}

// Joint-by-joint error percentages against a baseline, plus an AVERAGE row.
// Cells where the baseline error is zero are undefined and excluded from
// the averages.
struct PercentageTable {
  std::vector<std::string> joint_names;
  std::vector<std::string> method_names;  // baseline first
  std::vector<std::vector<std::optional<double>>> cells;  // [joint][method]
  std::vector<std::optional<double>> average_row;         // [method]
};

inline PercentageTable percentage_table(
    const ErrorReport& baseline,
    const std::vector<std::pair<std::string, ErrorReport>>& methods,
    const std::string& baseline_name = "baseline") {
  const std::size_t p = baseline.per_joint_error.size();
  for (const auto& [name, report] : methods)
    if (report.per_joint_error.size() != p || report.joint_names != baseline.joint_names)
      throw StructuralError("percentage_table: method '" + name +
                            "' does not share the baseline joint set");

  PercentageTable table;
  table.joint_names = baseline.joint_names;
  table.method_names.push_back(baseline_name);
  for (const auto& [name, report] : methods) table.method_names.push_back(name);

  const std::size_t m = table.method_names.size();
  table.cells.assign(p, std::vector<std::optional<double>>(m));
  for (std::size_t j = 0; j < p; ++j) {
    const double base = baseline.per_joint_error[j];
    if (base <= 0.0) continue;  // whole row undefined
    table.cells[j][0] = 100.0;
    for (std::size_t k = 0; k < methods.size(); ++k)
      table.cells[j][k + 1] = 100.0 * methods[k].second.per_joint_error[j] / base;
  }

  table.average_row.assign(m, std::nullopt);
  for (std::size_t k = 0; k < m; ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < p; ++j)
      if (table.cells[j][k]) {
        sum += *table.cells[j][k];
        ++count;
      }
    if (count > 0) table.average_row[k] = sum / static_cast<double>(count);
  }
  return table;
}

}  // namespace poselift
