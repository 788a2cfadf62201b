#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "poselift/error.hpp"

namespace poselift {

// Skeleton structure: named joints with parent links forming a single tree,
// plus the bone (limb) list derived from the links.
struct JointTopology {
  std::vector<std::string> joints;
  std::vector<int> parent;                 // -1 marks the root
  std::vector<std::pair<int, int>> limbs;  // (parent joint, child joint)
  int root = -1;

  std::size_t joint_count() const noexcept { return joints.size(); }

  int index_of(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < joints.size(); ++i)
      if (joints[i] == name) return static_cast<int>(i);
    return -1;
  }

  bool has_limb(int a, int b) const noexcept {
    for (const auto& [p, c] : limbs)
      if ((p == a && c == b) || (p == b && c == a)) return true;
    return false;
  }

  bool operator==(const JointTopology& other) const noexcept {
    return joints == other.joints && parent == other.parent;
  }

  static JointTopology from_parents(std::vector<std::string> names, std::vector<int> parents) {
    if (names.size() != parents.size())
      throw StructuralError("topology: joint and parent lists differ in length");
    if (names.size() < 2) throw StructuralError("topology: at least two joints required");

    std::unordered_set<std::string_view> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) throw StructuralError("topology: duplicate joint name '" + n + "'");

    JointTopology topo;
    topo.joints = std::move(names);
    topo.parent = std::move(parents);

    const int p_count = static_cast<int>(topo.joints.size());
    for (int j = 0; j < p_count; ++j) {
      const int p = topo.parent[j];
      if (p == -1) {
        if (topo.root != -1) throw StructuralError("topology: more than one root joint");
        topo.root = j;
      } else if (p < 0 || p >= p_count || p == j) {
        throw StructuralError("topology: invalid parent index for joint '" + topo.joints[j] + "'");
      }
    }
    if (topo.root == -1) throw StructuralError("topology: no root joint");

    // Every joint must reach the root without revisiting a node.
    for (int j = 0; j < p_count; ++j) {
      int steps = 0;
      for (int k = j; k != topo.root; k = topo.parent[k])
        if (++steps > p_count) throw StructuralError("topology: parent links contain a cycle");
    }

    for (int j = 0; j < p_count; ++j)
      if (j != topo.root) topo.limbs.emplace_back(topo.parent[j], j);
    return topo;
  }
};

using TopologyPtr = std::shared_ptr<const JointTopology>;

inline TopologyPtr make_topology(std::vector<std::string> names, std::vector<int> parents) {
  return std::make_shared<const JointTopology>(
      JointTopology::from_parents(std::move(names), std::move(parents)));
}

// The shipped default: a 15-joint skeleton rooted at the hip.
inline TopologyPtr canonical_topology() {
  static const TopologyPtr topo = make_topology(
      {"hip", "neck", "head", "l-shoulder", "l-elbow", "l-hand", "r-shoulder", "r-elbow",
       "r-hand", "l-hip", "l-knee", "l-foot", "r-hip", "r-knee", "r-foot"},
      {-1, 0, 1, 1, 3, 4, 1, 6, 7, 0, 9, 10, 0, 12, 13});
  return topo;
}

// Topologies loaded from different files compare structurally.
inline bool same_topology(const TopologyPtr& a, const TopologyPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

}  // namespace poselift
