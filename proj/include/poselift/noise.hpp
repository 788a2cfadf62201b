#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Gaussian noise level expressed as a signal-to-noise ratio in decibels,
// with +infinity as the "no noise" sentinel.
struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

// Adds i.i.d. zero-mean Gaussian noise to every 2D coordinate. The signal
// power is the pooled, mean-removed variance of all coordinate values in
// the sequence; the noise variance is power / 10^(snr_db / 10).
inline PoseSequence2D add_noise(const PoseSequence2D& seq, const NoiseSpec& spec) {
  if (std::isinf(spec.snr_db) && spec.snr_db > 0.0) return seq;
  if (!std::isfinite(spec.snr_db))
    throw ConfigError("add_noise: snr_db must be finite (or +inf for no noise)");

  const Eigen::Index p = static_cast<Eigen::Index>(seq.topology->joint_count());
  const double count = static_cast<double>(seq.size()) * static_cast<double>(2 * p);
  double mean = 0.0;
  for (const auto& f : seq.frames) mean += f.sum();
  mean /= count;
  double variance = 0.0;
  for (const auto& f : seq.frames) variance += (f.array() - mean).square().sum();
  variance /= count;
  if (variance <= 0.0)
    throw NoiseError("add_noise: zero-variance sequence, SNR is undefined");

  const double sigma = std::sqrt(variance / std::pow(10.0, spec.snr_db / 10.0));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, sigma);

  std::vector<Eigen::MatrixX2d> frames = seq.frames;
  for (auto& f : frames)
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index a = 0; a < 2; ++a) f(j, a) += gauss(rng);
  return PoseSequence2D(seq.topology, std::move(frames));
}

// SNR sweep points; defaults to {1, 9, 17} dB.
inline std::vector<double> snr_sweep_points(
    const std::optional<std::vector<double>>& custom = std::nullopt) {
  if (!custom) return {1.0, 9.0, 17.0};
  if (custom->empty()) throw ConfigError("snr sweep: the SNR point list is empty");
  return *custom;
}

}  // namespace poselift
