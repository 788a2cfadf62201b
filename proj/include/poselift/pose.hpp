#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/topology.hpp"

namespace poselift {

namespace detail {

inline void require_topology(const TopologyPtr& topo, const char* what) {
  if (!topo) throw StructuralError(std::string(what) + ": missing topology");
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.derived().allFinite()) throw StructuralError(std::string(what) + ": non-finite coordinate");
}

}  // namespace detail

// One frame of 3D joint positions, P x 3, rows in topology joint order.
struct Pose3D {
  TopologyPtr topology;
  Eigen::MatrixX3d coords;

  Pose3D(TopologyPtr topo, Eigen::MatrixX3d c) : topology(std::move(topo)), coords(std::move(c)) {
    detail::require_topology(topology, "Pose3D");
    if (static_cast<std::size_t>(coords.rows()) != topology->joint_count())
      throw StructuralError("Pose3D: coordinate rows do not match joint count");
    detail::require_finite(coords, "Pose3D");
  }

  // Column vector of length 3P, joint-major / axis-minor: x1 y1 z1 x2 ...
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(coords.rows() * 3);
    for (Eigen::Index j = 0; j < coords.rows(); ++j) v.segment<3>(3 * j) = coords.row(j).transpose();
    return v;
  }

  static Pose3D unflatten(TopologyPtr topo, const Eigen::VectorXd& v) {
    detail::require_topology(topo, "Pose3D::unflatten");
    const auto p = static_cast<Eigen::Index>(topo->joint_count());
    if (v.size() != 3 * p) throw StructuralError("Pose3D::unflatten: vector length is not 3P");
    Eigen::MatrixX3d c(p, 3);
    for (Eigen::Index j = 0; j < p; ++j) c.row(j) = v.segment<3>(3 * j).transpose();
    return Pose3D(std::move(topo), std::move(c));
  }
};

// One frame of image-plane joint positions, P x 2.
struct Pose2D {
  TopologyPtr topology;
  Eigen::MatrixX2d coords;

  Pose2D(TopologyPtr topo, Eigen::MatrixX2d c) : topology(std::move(topo)), coords(std::move(c)) {
    detail::require_topology(topology, "Pose2D");
    if (static_cast<std::size_t>(coords.rows()) != topology->joint_count())
      throw StructuralError("Pose2D: coordinate rows do not match joint count");
    detail::require_finite(coords, "Pose2D");
  }
};

namespace detail {

template <typename FrameMatrix>
struct PoseSequence {
  TopologyPtr topology;
  std::vector<FrameMatrix> frames;

  PoseSequence(TopologyPtr topo, std::vector<FrameMatrix> f)
      : topology(std::move(topo)), frames(std::move(f)) {
    require_topology(topology, "PoseSequence");
    if (frames.empty()) throw StructuralError("PoseSequence: at least one frame required");
    const auto p = static_cast<Eigen::Index>(topology->joint_count());
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t].rows() != p)
        throw StructuralError("PoseSequence: frame " + std::to_string(t) + " has wrong joint count");
      require_finite(frames[t], "PoseSequence");
    }
  }

  std::size_t size() const noexcept { return frames.size(); }
};

}  // namespace detail

struct PoseSequence3D : detail::PoseSequence<Eigen::MatrixX3d> {
  using detail::PoseSequence<Eigen::MatrixX3d>::PoseSequence;

  Pose3D pose(std::size_t t) const { return Pose3D(topology, frames.at(t)); }

  static PoseSequence3D from_poses(const std::vector<Pose3D>& poses) {
    if (poses.empty()) throw StructuralError("PoseSequence3D: at least one frame required");
    std::vector<Eigen::MatrixX3d> frames;
    frames.reserve(poses.size());
    for (const auto& p : poses) {
      if (!same_topology(p.topology, poses.front().topology))
        throw StructuralError("PoseSequence3D: frames disagree on topology");
      frames.push_back(p.coords);
    }
    return PoseSequence3D(poses.front().topology, std::move(frames));
  }
};

struct PoseSequence2D : detail::PoseSequence<Eigen::MatrixX2d> {
  using detail::PoseSequence<Eigen::MatrixX2d>::PoseSequence;

  Pose2D pose(std::size_t t) const { return Pose2D(topology, frames.at(t)); }
};

// Re-expresses a flattened pose relative to its hip joint.
inline Eigen::VectorXd hip_centered(const Eigen::VectorXd& flat, Eigen::Index hip) {
  const Eigen::Vector3d h = flat.segment<3>(3 * hip);
  Eigen::VectorXd out = flat;
  for (Eigen::Index j = 0; j * 3 < out.size(); ++j) out.segment<3>(3 * j) -= h;
  return out;
}

inline Eigen::MatrixX2d hip_centered(const Eigen::MatrixX2d& coords, Eigen::Index hip) {
  return coords.rowwise() - coords.row(hip);
}

// Bone lengths of a flattened pose, in topology limb order.
inline Eigen::VectorXd limb_lengths(const Eigen::VectorXd& flat, const JointTopology& topo) {
  Eigen::VectorXd lengths(static_cast<Eigen::Index>(topo.limbs.size()));
  for (std::size_t l = 0; l < topo.limbs.size(); ++l) {
    const auto& [a, b] = topo.limbs[l];
    lengths(static_cast<Eigen::Index>(l)) =
        (flat.segment<3>(3 * a) - flat.segment<3>(3 * b)).norm();
  }
  return lengths;
}

}  // namespace poselift
