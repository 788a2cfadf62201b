#pragma once

#include <string>
#include <utility>
#include <vector>

#include "poselift/pose.hpp"

namespace poselift {

// One joint coordinate of a sequence viewed as a discrete-time signal.
struct JointSignal {
  int joint = 0;
  int axis = 0;  // 0 = x, 1 = y, 2 = z
  std::vector<double> values;
};

// Decomposes a sequence into its 3P per-coordinate signals,
// ordered joint-major / axis-minor.
inline std::vector<JointSignal> sequence_to_signals(const PoseSequence3D& seq) {
  const auto p = static_cast<int>(seq.topology->joint_count());
  const std::size_t n = seq.size();
  std::vector<JointSignal> signals;
  signals.reserve(static_cast<std::size_t>(3 * p));
  for (int j = 0; j < p; ++j) {
    for (int axis = 0; axis < 3; ++axis) {
      JointSignal s{j, axis, std::vector<double>(n)};
      for (std::size_t t = 0; t < n; ++t) s.values[t] = seq.frames[t](j, axis);
      signals.push_back(std::move(s));
    }
  }
  return signals;
}

// Inverse of sequence_to_signals. Every (joint, axis) pair must appear
// exactly once and all signals must share one length.
inline PoseSequence3D signals_to_sequence(const std::vector<JointSignal>& signals,
                                          TopologyPtr topology) {
  detail::require_topology(topology, "signals_to_sequence");
  const auto p = static_cast<int>(topology->joint_count());
  if (signals.size() != static_cast<std::size_t>(3 * p))
    throw StructuralError("signals_to_sequence: expected " + std::to_string(3 * p) +
                          " signals, got " + std::to_string(signals.size()));

  const std::size_t n = signals.front().values.size();
  if (n == 0) throw StructuralError("signals_to_sequence: empty signals");

  std::vector<const JointSignal*> by_slot(static_cast<std::size_t>(3 * p), nullptr);
  for (const auto& s : signals) {
    if (s.joint < 0 || s.joint >= p || s.axis < 0 || s.axis > 2)
      throw StructuralError("signals_to_sequence: signal labeled with unknown (joint, axis)");
    if (s.values.size() != n)
      throw StructuralError("signals_to_sequence: signals differ in length");
    auto& slot = by_slot[static_cast<std::size_t>(3 * s.joint + s.axis)];
    if (slot)
      throw StructuralError("signals_to_sequence: duplicate signal for joint '" +
                            topology->joints[static_cast<std::size_t>(s.joint)] + "'");
    slot = &s;
  }

  std::vector<Eigen::MatrixX3d> frames(n, Eigen::MatrixX3d(p, 3));
  for (int j = 0; j < p; ++j)
    for (int axis = 0; axis < 3; ++axis) {
      const auto& values = by_slot[static_cast<std::size_t>(3 * j + axis)]->values;
      for (std::size_t t = 0; t < n; ++t) frames[t](j, axis) = values[t];
    }
  return PoseSequence3D(std::move(topology), std::move(frames));
}

}  // namespace poselift
