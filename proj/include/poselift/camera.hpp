#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <utility>

#include "poselift/error.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Weak-perspective camera: x = s * R_{1:2} * X per joint, where R_{1:2}
// holds the first two rows of the rotation.
struct CameraParams {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  CameraParams() = default;
  CameraParams(double s, Eigen::Matrix3d r) : scale(s), rotation(std::move(r)) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw StructuralError("CameraParams: scale must be positive and finite");
    if (((rotation.transpose() * rotation) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
      throw StructuralError("CameraParams: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw StructuralError("CameraParams: rotation has determinant != +1");
  }

  Eigen::Matrix<double, 2, 3> top_rows() const { return rotation.topRows<2>(); }
};

// Axis rotations, pinned so that rot_x(+pi/2) maps +z to +y.
inline Eigen::Matrix3d rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, s, 0, -s, c;
  return r;
}

inline Eigen::Matrix3d rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, 0, -s, 0, 1, 0, s, 0, c;
  return r;
}

inline Eigen::Matrix3d rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, s, 0, -s, c, 0, 0, 0, 1;
  return r;
}

// Projects a flattened pose (length 3P) to P x 2 image coordinates.
inline Eigen::MatrixX2d project(const Eigen::VectorXd& pose, const CameraParams& cam) {
  if (pose.size() % 3 != 0) throw StructuralError("project: pose length is not a multiple of 3");
  const Eigen::Index p = pose.size() / 3;
  const Eigen::Matrix<double, 2, 3> r12 = cam.top_rows();
  Eigen::MatrixX2d out(p, 2);
  for (Eigen::Index j = 0; j < p; ++j)
    out.row(j) = (cam.scale * (r12 * pose.segment<3>(3 * j))).transpose();
  return out;
}

// Least-squares weak-perspective fit of (s, R) mapping a 3D model pose onto
// observed 2D landmarks. Both sides are re-expressed relative to the hip
// joint first; the 2x3 sub-rotation comes from an orthogonal Procrustes
// solve of the cross-covariance and is completed to a proper rotation by
// the cross product of its rows.
inline CameraParams fit_camera(const Eigen::MatrixX2d& observed, const Eigen::VectorXd& model_pose,
                               Eigen::Index hip_index) {
  const Eigen::Index p = observed.rows();
  if (model_pose.size() != 3 * p)
    throw StructuralError("fit_camera: model pose length does not match observation");
  if (p < 3) throw FitError("fit_camera: at least three joints required");
  if (hip_index < 0 || hip_index >= p) throw StructuralError("fit_camera: hip index out of range");

  Eigen::MatrixX3d model(p, 3);
  for (Eigen::Index j = 0; j < p; ++j) model.row(j) = model_pose.segment<3>(3 * j).transpose();
  const Eigen::MatrixX3d model_c = model.rowwise() - model.row(hip_index);
  const Eigen::MatrixX2d obs_c = observed.rowwise() - observed.row(hip_index);

  {
    Eigen::JacobiSVD<Eigen::MatrixX3d> rank_check(model_c);
    const auto& sv = rank_check.singularValues();
    if (sv(0) <= 0.0 || sv(1) <= 1e-10 * sv(0))
      throw FitError("fit_camera: degenerate model pose (centered rank < 2)");
  }

  // Unconstrained least-squares 2x3 map from model to image (the
  // scatter-normalized cross-covariance), then its orthogonal-Procrustes
  // projection onto matrices with orthonormal rows. For noise-free
  // weak-perspective data the map is exactly s * R_{1:2}, so the SVD
  // recovers the generating sub-rotation.
  const Eigen::Matrix<double, 2, 3> cross = obs_c.transpose() * model_c;
  const Eigen::Matrix3d scatter = model_c.transpose() * model_c;
  const Eigen::Matrix<double, 2, 3> lsq_map =
      scatter.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(lsq_map,
                                                    Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<double, 2, 3> r12 =
      svd.matrixU() * svd.matrixV().leftCols<2>().transpose();

  Eigen::Matrix3d rotation;
  rotation.topRows<2>() = r12;
  rotation.row(2) = r12.row(0).cross(r12.row(1));

  const Eigen::MatrixX2d rotated = (r12 * model_c.transpose()).transpose();
  const double denom = rotated.squaredNorm();
  double scale = denom > 0.0 ? (obs_c.cwiseProduct(rotated)).sum() / denom : 0.0;
  scale = std::max(scale, 1e-9);

  return CameraParams(scale, rotation);
}

inline CameraParams fit_camera(const Pose2D& observed, const Eigen::VectorXd& model_pose) {
  return fit_camera(observed.coords, model_pose, observed.topology->root);
}

// Applies a fixed orthographic view frame by frame.
inline PoseSequence2D orthographic_project_sequence(const PoseSequence3D& seq,
                                                    const CameraParams& view) {
  std::vector<Eigen::MatrixX2d> frames;
  frames.reserve(seq.size());
  for (const auto& f : seq.frames) frames.push_back(project(Pose3D(seq.topology, f).flatten(), view));
  return PoseSequence2D(seq.topology, std::move(frames));
}

}  // namespace poselift
