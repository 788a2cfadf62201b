#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/pose.hpp"

namespace poselift {

enum class LimitsMode { permissive, strict };

// Bounds on the interior angle of the hinge at `vertex`, measured between
// the limbs (end_a, vertex) and (vertex, end_b).
struct HingeLimit {
  int vertex = 0;
  int end_a = 0;
  int end_b = 0;
  double min_deg = 0.0;
  double max_deg = 180.0;
};

struct LimitsModel {
  LimitsMode mode = LimitsMode::permissive;
  std::vector<HingeLimit> entries;

  static LimitsModel permissive_empty() { return LimitsModel{}; }

  // Shipped stand-in table: elbows and knees constrained to [30, 180]
  // degrees, everything else permissive. Joints are looked up by their
  // canonical names; topologies without them just stay permissive.
  static LimitsModel conservative_default(const JointTopology& topo) {
    LimitsModel model;
    const auto add = [&](const char* parent, const char* vertex, const char* child) {
      const int a = topo.index_of(parent), v = topo.index_of(vertex), b = topo.index_of(child);
      if (a < 0 || v < 0 || b < 0) return;
      model.entries.push_back(HingeLimit{v, a, b, 30.0, 180.0});
    };
    add("l-shoulder", "l-elbow", "l-hand");
    add("r-shoulder", "r-elbow", "r-hand");
    add("l-hip", "l-knee", "l-foot");
    add("r-hip", "r-knee", "r-foot");
    return model;
  }

  void validate(const JointTopology& topo) const {
    const int p = static_cast<int>(topo.joint_count());
    for (const auto& e : entries) {
      if (e.vertex < 0 || e.vertex >= p || e.end_a < 0 || e.end_a >= p || e.end_b < 0 || e.end_b >= p)
        throw StructuralError("limits: hinge references a joint outside the topology");
      if (!topo.has_limb(e.end_a, e.vertex) || !topo.has_limb(e.vertex, e.end_b))
        throw StructuralError("limits: hinge at '" + topo.joints[static_cast<std::size_t>(e.vertex)] +
                              "' references limbs missing from the topology");
      if (!(0.0 <= e.min_deg && e.min_deg <= e.max_deg && e.max_deg <= 180.0))
        throw StructuralError("limits: angle bounds must satisfy 0 <= min <= max <= 180");
    }
  }
};

namespace detail {

// Interior angle at the hinge vertex, in degrees; negative when a limb has
// zero length and the angle is undefined.
inline double hinge_angle_deg(const Eigen::MatrixX3d& coords, const HingeLimit& e) {
  const Eigen::Vector3d u = coords.row(e.end_a) - coords.row(e.vertex);
  const Eigen::Vector3d v = coords.row(e.end_b) - coords.row(e.vertex);
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return -1.0;
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace detail

// Per-joint validity vector: a joint passes when every hinge entry anchored
// at it has its interior angle inside the closed bounds. Joints without
// entries follow the model mode.
inline std::vector<bool> is_valid(const Pose3D& pose, const LimitsModel& model) {
  model.validate(*pose.topology);
  const auto p = pose.topology->joint_count();
  std::vector<bool> verdict(p, model.mode == LimitsMode::permissive);
  std::vector<bool> has_entry(p, false);
  for (const auto& e : model.entries) {
    const auto v = static_cast<std::size_t>(e.vertex);
    const double angle = detail::hinge_angle_deg(pose.coords, e);
    const bool ok = angle >= e.min_deg && angle <= e.max_deg;  // angle < 0 fails both
    verdict[v] = (has_entry[v] ? bool(verdict[v]) : true) && ok;
    has_entry[v] = true;
  }
  return verdict;
}

inline bool pose_is_valid(const Pose3D& pose, const LimitsModel& model) {
  const auto verdict = is_valid(pose, model);
  return std::all_of(verdict.begin(), verdict.end(), [](bool b) { return b; });
}

}  // namespace poselift
