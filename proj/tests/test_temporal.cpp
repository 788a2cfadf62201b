#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "poselift/temporal.hpp"
#include "support/synthetic.hpp"

using namespace poselift;
using testsupport::Rng;

namespace {

const std::vector<FilterKind> kAllKinds{FilterKind::sma, FilterKind::ema, FilterKind::wma,
                                        FilterKind::mma};

std::vector<double> random_signal(Rng& rng, std::size_t max_len = 64) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  std::vector<double> s(len(rng));
  for (auto& v : s) v = value(rng);
  return s;
}

}  // namespace

TEST_CASE("hand-evaluated filter examples") {
  CHECK(smooth_values({1, 2, 3, 4, 5}, {FilterKind::sma, 2}) ==
        std::vector<double>{1, 2, 2.5, 3.5, 4.5});
  CHECK(smooth_values({2, 4, 8}, {FilterKind::ema, 3}) == std::vector<double>{2, 3, 5.5});
  CHECK(smooth_values({1, 2, 3, 4}, {FilterKind::wma, 2}) ==
        std::vector<double>{1, 2, 8.0 / 3.0, 11.0 / 3.0});
  CHECK(smooth_values({4, 0}, {FilterKind::mma, 2}) == std::vector<double>{4, 2});
}

TEST_CASE("window of one is the identity for every kind") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_signal(rng);
    for (const auto kind : kAllKinds) CHECK(smooth_values(s, {kind, 1}) == s);
  }
}

TEST_CASE("constant signals are exact fixed points") {
  for (const double c : {0.1, -3.25, 1.0 / 3.0, 7.5e8}) {
    const std::vector<double> s(23, c);
    for (const auto kind : kAllKinds)
      for (const int w : {1, 2, 3, 5, 8}) {
        const auto out = smooth_values(s, {kind, w});
        for (const double v : out) CHECK(v == c);
      }
  }
}

TEST_CASE("filters match the direct-evaluation oracles") {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_signal(rng);
    for (const int w : {1, 2, 3, 5, 8}) {
      const auto check = [&](FilterKind kind, const std::vector<double>& expected) {
        const auto got = smooth_values(s, {kind, w});
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i)
          CHECK(std::abs(got[i] - expected[i]) <= 1e-12);
      };
      check(FilterKind::sma, testsupport::oracle_sma(s, w));
      check(FilterKind::ema, testsupport::oracle_ema(s, w));
      check(FilterKind::wma, testsupport::oracle_wma(s, w));
      check(FilterKind::mma, testsupport::oracle_mma(s, w));
    }
  }
}

TEST_CASE("outputs stay inside the input range") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_signal(rng);
    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    for (const auto kind : kAllKinds)
      for (const int w : {1, 2, 3, 5, 8})
        for (const double v : smooth_values(s, {kind, w})) {
          CHECK(v >= lo - 1e-12);
          CHECK(v <= hi + 1e-12);
        }
  }
}

TEST_CASE("filters are linear in the signal") {
  Rng rng(37);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_signal(rng);
    auto t = random_signal(rng);
    const auto n = std::min(s.size(), t.size());
    s.resize(n);
    t.resize(n);
    const double a = coeff(rng), b = coeff(rng);
    std::vector<double> combo(n);
    for (std::size_t i = 0; i < n; ++i) combo[i] = a * s[i] + b * t[i];
    for (const auto kind : kAllKinds)
      for (const int w : {2, 5}) {
        const auto direct = smooth_values(combo, {kind, w});
        const auto ss = smooth_values(s, {kind, w});
        const auto tt = smooth_values(t, {kind, w});
        for (std::size_t i = 0; i < n; ++i)
          CHECK(std::abs(direct[i] - (a * ss[i] + b * tt[i])) <= 1e-9);
      }
  }
}

TEST_CASE("SMA and WMA are shift-equivariant in steady state") {
  Rng rng(41);
  const int shift = 3;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s = random_signal(rng, 40);
    if (s.size() < 20) s.resize(20, 1.0);
    std::vector<double> shifted(s.size() + shift, s.front());
    std::copy(s.begin(), s.end(), shifted.begin() + shift);
    for (const auto kind : {FilterKind::sma, FilterKind::wma})
      for (const int w : {2, 4}) {
        const auto base = smooth_values(s, {kind, w});
        const auto moved = smooth_values(shifted, {kind, w});
        // Steady state excludes the pass-through prefix of both signals.
        for (std::size_t i = static_cast<std::size_t>(w); i < s.size(); ++i)
          CHECK(moved[i + shift] == base[i]);
      }
  }
}

TEST_CASE("EMA(w) coincides with MMA((w+1)/2)") {
  Rng rng(43);
  for (const int w : {1, 3, 5}) {
    const auto s = random_signal(rng);
    CHECK(smooth_values(s, {FilterKind::ema, w}) ==
          smooth_values(s, {FilterKind::mma, (w + 1) / 2}));
  }
}

TEST_CASE("smooth_sequence equals per-signal smoothing and recomposition") {
  const auto seq = testsupport::smooth_motion(40, 5);
  const FilterSpec spec{FilterKind::wma, 4};
  const auto smoothed = smooth_sequence(seq, spec);

  auto signals = sequence_to_signals(seq);
  for (auto& s : signals) s.values = smooth_values(s.values, spec);
  const auto manual = signals_to_sequence(signals, seq.topology);

  REQUIRE(smoothed.size() == seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) CHECK(smoothed.frames[t] == manual.frames[t]);
}

TEST_CASE("single-frame and constant sequences are unchanged") {
  const auto topo = canonical_topology();
  const PoseSequence3D single(topo, {testsupport::rest_pose(topo).coords});
  const PoseSequence3D constant(topo, std::vector<Eigen::MatrixX3d>(
                                          8, testsupport::rest_pose(topo).coords));
  for (const auto kind : kAllKinds) {
    const auto s1 = smooth_sequence(single, {kind, 5});
    CHECK(s1.frames[0] == single.frames[0]);
    const auto s2 = smooth_sequence(constant, {kind, 3});
    for (std::size_t t = 0; t < constant.size(); ++t) CHECK(s2.frames[t] == constant.frames[t]);
  }
}

TEST_CASE("filter spec validation") {
  CHECK_THROWS_AS(FilterSpec(FilterKind::sma, 0), ConfigError);
  CHECK_THROWS_AS(filter_kind_from_string("median"), ConfigError);
  CHECK(FilterSpec(FilterKind::mma, 5).name() == "mma_w5");
}
