#pragma once

#include <string>
#include <vector>

#include "poselift/error.hpp"
#include "poselift/signal.hpp"

namespace poselift {

enum class FilterKind { sma, ema, wma, mma };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::sma: return "sma";
    case FilterKind::ema: return "ema";
    case FilterKind::wma: return "wma";
    case FilterKind::mma: return "mma";
  }
  return "?";
}

inline FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "sma" || s == "SMA") return FilterKind::sma;
  if (s == "ema" || s == "EMA") return FilterKind::ema;
  if (s == "wma" || s == "WMA") return FilterKind::wma;
  if (s == "mma" || s == "MMA") return FilterKind::mma;
  throw ConfigError("unknown filter kind '" + s + "' (expected sma, ema, wma or mma)");
}

struct FilterSpec {
  FilterKind kind = FilterKind::mma;
  int window = 5;

  FilterSpec() = default;
  FilterSpec(FilterKind k, int w) : kind(k), window(w) {
    if (window < 1) throw ConfigError("filter window must be >= 1");
  }

  std::string name() const { return std::string(to_string(kind)) + "_w" + std::to_string(window); }
};

namespace detail {

// Exponential recursion shared by the EMA (alpha = 2/(w+1)) and the
// MMA (alpha = 1/w). The update is written as out += alpha * (in - out)
// so a constant input is a fixed point in floating point too.
inline std::vector<double> exponential_smooth(const std::vector<double>& s, double alpha) {
  std::vector<double> out(s.size());
  out[0] = s[0];
  for (std::size_t t = 1; t < s.size(); ++t)
    out[t] = (alpha == 1.0) ? s[t] : out[t - 1] + alpha * (s[t] - out[t - 1]);
  return out;
}

// Window means and weighted means are accumulated as deviations from the
// newest sample, which keeps constant signals exactly fixed.
inline std::vector<double> window_smooth(const std::vector<double>& s, int w, bool weighted) {
  std::vector<double> out(s.size());
  const auto uw = static_cast<std::size_t>(w);
  const double total_weight = weighted ? 0.5 * w * (w + 1) : static_cast<double>(w);
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (t < uw) {
      out[t] = s[t];
      continue;
    }
    double acc = 0.0;
    for (int k = 0; k < w; ++k) {
      const double coeff = weighted ? static_cast<double>(w - k) : 1.0;
      acc += coeff * (s[t - static_cast<std::size_t>(k)] - s[t]);
    }
    out[t] = s[t] + acc / total_weight;
  }
  return out;
}

}  // namespace detail

inline std::vector<double> smooth_values(const std::vector<double>& values, const FilterSpec& spec) {
  if (values.empty()) throw StructuralError("smooth_values: empty signal");
  switch (spec.kind) {
    case FilterKind::sma: return detail::window_smooth(values, spec.window, false);
    case FilterKind::wma: return detail::window_smooth(values, spec.window, true);
    case FilterKind::ema: return detail::exponential_smooth(values, 2.0 / (spec.window + 1));
    case FilterKind::mma: return detail::exponential_smooth(values, 1.0 / spec.window);
  }
  throw ConfigError("smooth_values: unknown filter kind");
}

inline JointSignal smooth_signal(const JointSignal& sig, const FilterSpec& spec) {
  return JointSignal{sig.joint, sig.axis, smooth_values(sig.values, spec)};
}

// Smooths every per-coordinate signal of the sequence independently.
inline PoseSequence3D smooth_sequence(const PoseSequence3D& seq, const FilterSpec& spec) {
  auto signals = sequence_to_signals(seq);
  for (auto& s : signals) s.values = smooth_values(s.values, spec);
  return signals_to_sequence(signals, seq.topology);
}

}  // namespace poselift
