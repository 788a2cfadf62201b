#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <string>
#include <utility>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Mean pose plus an over-complete basis of unit-norm pose directions.
// Columns are grouped by the action class they were derived from.
struct PoseDictionary {
  TopologyPtr topology;
  Eigen::VectorXd mean;    // 3P
  Eigen::MatrixXd basis;   // 3P x M, unit-norm columns
  std::vector<std::string> group_labels;  // one label per column

  PoseDictionary(TopologyPtr topo, Eigen::VectorXd mu, Eigen::MatrixXd b,
                 std::vector<std::string> labels)
      : topology(std::move(topo)), mean(std::move(mu)), basis(std::move(b)),
        group_labels(std::move(labels)) {
    detail::require_topology(topology, "PoseDictionary");
    const auto dim = static_cast<Eigen::Index>(3 * topology->joint_count());
    if (mean.size() != dim) throw StructuralError("PoseDictionary: mean length is not 3P");
    if (basis.rows() != dim) throw StructuralError("PoseDictionary: basis rows are not 3P");
    if (group_labels.size() != static_cast<std::size_t>(basis.cols()))
      throw StructuralError("PoseDictionary: one group label required per basis column");
    detail::require_finite(mean, "PoseDictionary");
    detail::require_finite(basis, "PoseDictionary");
    for (Eigen::Index i = 0; i < basis.cols(); ++i)
      if (std::abs(basis.col(i).norm() - 1.0) > 1e-9)
        throw StructuralError("PoseDictionary: basis column " + std::to_string(i) +
                              " is not unit norm");
  }

  Eigen::Index size() const noexcept { return basis.cols(); }
};

// Selected column indices with their coefficients.
struct SparseCode {
  std::vector<Eigen::Index> indices;
  Eigen::VectorXd coefficients;

  std::size_t size() const noexcept { return indices.size(); }
};

// X = mu + B* w over the columns named by the code.
inline Eigen::VectorXd reconstruct_pose(const PoseDictionary& dict, const SparseCode& code) {
  if (code.coefficients.size() != static_cast<Eigen::Index>(code.indices.size()))
    throw StructuralError("reconstruct_pose: indices and coefficients differ in length");
  Eigen::VectorXd pose = dict.mean;
  for (std::size_t k = 0; k < code.indices.size(); ++k) {
    const Eigen::Index i = code.indices[k];
    if (i < 0 || i >= dict.size())
      throw StructuralError("reconstruct_pose: basis index " + std::to_string(i) + " out of range");
    pose += code.coefficients(static_cast<Eigen::Index>(k)) * dict.basis.col(i);
  }
  return pose;
}

struct DictionaryBuildReport {
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, int>> group_columns;  // columns kept per group
};

// Builds the dictionary from a corpus grouped by action class: the mean is
// the grand average over all frames, and each group contributes the top
// principal directions of its grand-mean-centered frames as unit-norm
// columns. Groups with no usable variance contribute nothing.
inline PoseDictionary build_dictionary(
    const std::vector<std::pair<std::string, std::vector<PoseSequence3D>>>& corpus,
    int bases_per_group, DictionaryBuildReport* report = nullptr) {
  if (corpus.empty()) throw ConfigError("build_dictionary: empty corpus");
  if (bases_per_group < 1) throw ConfigError("build_dictionary: bases_per_group must be >= 1");

  TopologyPtr topology;
  for (const auto& [name, seqs] : corpus)
    for (const auto& seq : seqs) {
      if (!topology) topology = seq.topology;
      if (!same_topology(topology, seq.topology))
        throw StructuralError("build_dictionary: corpus sequences disagree on topology ('" + name +
                              "')");
    }
  if (!topology) throw ConfigError("build_dictionary: corpus contains no sequences");
  const auto dim = static_cast<Eigen::Index>(3 * topology->joint_count());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::Index total_frames = 0;
  for (const auto& [name, seqs] : corpus)
    for (const auto& seq : seqs)
      for (const auto& frame : seq.frames) {
        mean += Pose3D(topology, frame).flatten();
        ++total_frames;
      }
  if (total_frames == 0) throw ConfigError("build_dictionary: corpus contains no frames");
  mean /= static_cast<double>(total_frames);

  std::vector<Eigen::VectorXd> columns;
  std::vector<std::string> labels;
  for (const auto& [name, seqs] : corpus) {
    Eigen::Index group_frames = 0;
    for (const auto& seq : seqs) group_frames += static_cast<Eigen::Index>(seq.size());
    if (group_frames == 0) {
      if (report) report->warnings.push_back("group '" + name + "' is empty, skipped");
      if (report) report->group_columns.emplace_back(name, 0);
      continue;
    }

    Eigen::MatrixXd centered(dim, group_frames);
    Eigen::Index col = 0;
    for (const auto& seq : seqs)
      for (const auto& frame : seq.frames)
        centered.col(col++) = Pose3D(topology, frame).flatten() - mean;

    // Scatter eigendecomposition; eigenvalues are squared singular values
    // of the centered data matrix.
    const Eigen::MatrixXd scatter = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
    if (eig.info() != Eigen::Success)
      throw FitError("build_dictionary: eigendecomposition failed for group '" + name + "'");

    // Eigenvalues come out ascending; take the top ones above the
    // zero-variance threshold.
    const Eigen::VectorXd evals = eig.eigenvalues();
    const double sigma_max = std::sqrt(std::max(evals(dim - 1), 0.0));
    const double tol = 1e-9 * std::max(1.0, sigma_max);

    int kept = 0;
    for (Eigen::Index r = 0; r < dim && kept < bases_per_group; ++r) {
      const Eigen::Index idx = dim - 1 - r;
      const double sigma = std::sqrt(std::max(evals(idx), 0.0));
      if (sigma <= tol) break;
      Eigen::VectorXd direction = eig.eigenvectors().col(idx);
      // Canonical sign: largest-magnitude entry positive.
      Eigen::Index max_idx = 0;
      direction.cwiseAbs().maxCoeff(&max_idx);
      if (direction(max_idx) < 0.0) direction = -direction;
      columns.push_back(direction.normalized());
      labels.push_back(name);
      ++kept;
    }
    if (report) report->group_columns.emplace_back(name, kept);
    if (kept == 0 && report)
      report->warnings.push_back("group '" + name + "' has no usable variance, contributed no columns");
  }

  Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    basis.col(static_cast<Eigen::Index>(i)) = columns[i];
  return PoseDictionary(std::move(topology), std::move(mean), std::move(basis), std::move(labels));
}

}  // namespace poselift
