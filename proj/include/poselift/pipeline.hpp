#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poselift/camera.hpp"
#include "poselift/dictionary.hpp"
#include "poselift/error.hpp"
#include "poselift/io.hpp"
#include "poselift/lifter.hpp"
#include "poselift/limits.hpp"
#include "poselift/metrics.hpp"
#include "poselift/noise.hpp"
#include "poselift/temporal.hpp"

namespace poselift {

// Orthographic view used to synthesize 2D input from ground truth.
struct CameraSpec {
  double scale = 1.0;
  std::array<double, 3> euler_deg{0.0, 0.0, 0.0};  // applied as Rz * Ry * Rx

  CameraParams to_camera() const {
    const double d2r = std::numbers::pi / 180.0;
    return CameraParams(scale, rot_z(euler_deg[2] * d2r) * rot_y(euler_deg[1] * d2r) *
                                   rot_x(euler_deg[0] * d2r));
  }
};

struct PipelineConfig {
  std::string dictionary_path;
  std::optional<std::string> limits_path;
  LiftConfig lift;
  std::vector<FilterSpec> filters{FilterSpec(FilterKind::mma, 5)};
  bool baseline_only = false;
  std::optional<double> noise_snr_db;
  std::optional<std::uint64_t> noise_seed;  // defaults to `seed`
  std::uint64_t seed = 0;
  std::string out_dir;
  CameraSpec camera;
  int sweep_trials = 5;

  void validate() const {
    lift.validate();
    if (dictionary_path.empty()) throw ConfigError("config: 'dictionary' is required");
    if (filters.empty() && !baseline_only)
      throw ConfigError("config: at least one filter is required unless baseline_only is set");
    if (sweep_trials < 1) throw ConfigError("config: sweep_trials must be >= 1");
  }

  NoiseSpec noise_spec() const { return NoiseSpec{*noise_snr_db, noise_seed.value_or(seed)}; }

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig from_json_file(const std::string& path) {
    return from_json(detail::parse_json(detail::read_file(path), path));
  }
  nlohmann::json to_json() const;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

// splitmix64, used to derive independent per-trial noise seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
                              {"dictionary", "limits", "lift", "filters", "baseline_only", "noise",
                               "seed", "out", "camera", "sweep_trials"},
                              "config");
  PipelineConfig cfg;
  try {
    if (j.contains("dictionary")) cfg.dictionary_path = j.at("dictionary").get<std::string>();
    if (j.contains("limits")) cfg.limits_path = j.at("limits").get<std::string>();
    if (j.contains("lift")) {
      const auto& jl = j.at("lift");
      detail::reject_unknown_keys(
          jl, {"max_bases", "residual_tol", "anthro_weight", "max_alternations", "candidate_flips"},
          "lift");
      if (jl.contains("max_bases")) cfg.lift.max_bases = jl.at("max_bases").get<int>();
      if (jl.contains("residual_tol")) cfg.lift.residual_tol = jl.at("residual_tol").get<double>();
      if (jl.contains("anthro_weight")) cfg.lift.anthro_weight = jl.at("anthro_weight").get<double>();
      if (jl.contains("max_alternations"))
        cfg.lift.max_alternations = jl.at("max_alternations").get<int>();
      if (jl.contains("candidate_flips"))
        cfg.lift.candidate_flips = jl.at("candidate_flips").get<bool>();
    }
    if (j.contains("filters")) {
      cfg.filters.clear();
      for (const auto& jf : j.at("filters")) {
        detail::reject_unknown_keys(jf, {"kind", "window"}, "filters");
        cfg.filters.emplace_back(filter_kind_from_string(jf.at("kind").get<std::string>()),
                                 jf.contains("window") ? jf.at("window").get<int>() : 5);
      }
    }
    if (j.contains("baseline_only")) cfg.baseline_only = j.at("baseline_only").get<bool>();
    if (j.contains("noise")) {
      const auto& jn = j.at("noise");
      detail::reject_unknown_keys(jn, {"snr_db", "seed"}, "noise");
      cfg.noise_snr_db = jn.at("snr_db").get<double>();
      if (jn.contains("seed")) cfg.noise_seed = jn.at("seed").get<std::uint64_t>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("camera")) {
      const auto& jc = j.at("camera");
      detail::reject_unknown_keys(jc, {"scale", "euler_deg"}, "camera");
      if (jc.contains("scale")) cfg.camera.scale = jc.at("scale").get<double>();
      if (jc.contains("euler_deg")) {
        const auto angles = jc.at("euler_deg").get<std::vector<double>>();
        if (angles.size() != 3) throw ConfigError("config: camera.euler_deg needs 3 angles");
        std::copy(angles.begin(), angles.end(), cfg.camera.euler_deg.begin());
      }
    }
    if (j.contains("sweep_trials")) cfg.sweep_trials = j.at("sweep_trials").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

// Effective configuration with every default resolved, echoed into manifests.
inline nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json jfilters = nlohmann::json::array();
  for (const auto& f : filters)
    jfilters.push_back({{"kind", to_string(f.kind)}, {"window", f.window}});
  nlohmann::json j{{"dictionary", dictionary_path},
                   {"lift",
                    {{"max_bases", lift.max_bases},
                     {"residual_tol", lift.residual_tol},
                     {"anthro_weight", lift.anthro_weight},
                     {"max_alternations", lift.max_alternations},
                     {"candidate_flips", lift.candidate_flips}}},
                   {"filters", std::move(jfilters)},
                   {"baseline_only", baseline_only},
                   {"seed", seed},
                   {"out", out_dir},
                   {"camera", {{"scale", camera.scale}, {"euler_deg", camera.euler_deg}}},
                   {"sweep_trials", sweep_trials}};
  if (limits_path) j["limits"] = *limits_path;
  if (noise_snr_db) {
    j["noise"] = {{"snr_db", *noise_snr_db}, {"seed", noise_seed.value_or(seed)}};
  }
  return j;
}

// Dictionary and limits resolved from the configuration.
struct PipelineContext {
  PoseDictionary dictionary;
  LimitsModel limits;
};

inline PipelineContext load_context(const PipelineConfig& cfg) {
  PoseDictionary dict = load_dictionary(cfg.dictionary_path);
  LimitsModel limits = cfg.limits_path ? load_limits(*cfg.limits_path, *dict.topology)
                                       : LimitsModel::conservative_default(*dict.topology);
  return PipelineContext{std::move(dict), std::move(limits)};
}

// Stage-1 lift plus one smoothed sequence per filter spec.
struct VariantSet {
  PoseSequence3D baseline;
  std::vector<std::pair<std::string, PoseSequence3D>> smoothed;
  std::vector<LiftResult> lifts;
};

inline VariantSet reconstruct_variants(const PoseSequence2D& input, const PipelineContext& ctx,
                                       const PipelineConfig& cfg) {
  std::vector<LiftResult> lifts = lift_sequence(input, ctx.dictionary, ctx.limits, cfg.lift);
  std::vector<Pose3D> poses;
  poses.reserve(lifts.size());
  for (const auto& r : lifts) poses.push_back(r.pose);
  PoseSequence3D baseline = PoseSequence3D::from_poses(poses);

  std::vector<std::pair<std::string, PoseSequence3D>> smoothed;
  for (const auto& spec : cfg.filters)
    smoothed.emplace_back(spec.name(), smooth_sequence(baseline, spec));
  return VariantSet{std::move(baseline), std::move(smoothed), std::move(lifts)};
}

// Scores for one reconstruction run against ground truth.
struct CompareResult {
  ErrorReport baseline_report;
  std::vector<std::pair<std::string, ErrorReport>> method_reports;
  PercentageTable table;
};

inline CompareResult score_variants(const VariantSet& variants, const PoseSequence3D& gt) {
  CompareResult result;
  result.baseline_report = sequence_error(variants.baseline, gt);
  for (const auto& [name, seq] : variants.smoothed)
    result.method_reports.emplace_back(name, sequence_error(seq, gt));
  result.table = percentage_table(result.baseline_report, result.method_reports);
  return result;
}

namespace detail {

// Tracks files written by a run so a failure leaves no partial outputs.
class OutputTracker {
 public:
  explicit OutputTracker(std::filesystem::path root) : root_(std::move(root)) {}

  std::string file(const std::filesystem::path& relative) {
    const auto path = root_ / relative;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    files_.push_back(path);
    return path.string();
  }

  void discard() noexcept {
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::data, std::string(stage) + ": " + e.what());
  }
}

inline nlohmann::json per_frame_manifest(const std::vector<LiftResult>& lifts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : lifts)
    arr.push_back({{"residual", r.residual}, {"valid", r.valid}, {"iterations", r.iterations}});
  return arr;
}

inline void write_variants(OutputTracker& out, const VariantSet& variants) {
  save_sequence(variants.baseline, out.file("baseline/sequence.csv"), Format::csv);
  save_sequence(variants.baseline, out.file("baseline/sequence.json"), Format::json);
  for (const auto& [name, seq] : variants.smoothed) {
    save_sequence(seq, out.file(name + "/sequence.csv"), Format::csv);
    save_sequence(seq, out.file(name + "/sequence.json"), Format::json);
  }
}

}  // namespace detail

struct ReconstructRun {
  VariantSet variants;
  std::string manifest_path;
};

// Lifts a 2D sequence and writes the unsmoothed baseline plus one smoothed
// sequence per filter, with a manifest echoing the effective configuration.
inline ReconstructRun run_reconstruct(const PipelineConfig& cfg, const std::string& input_path) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("reconstruct: output directory is required");
  detail::OutputTracker out{cfg.out_dir};
  try {
    const PipelineContext ctx = detail::with_stage("load", [&] { return load_context(cfg); });
    const PoseSequence2D input = detail::with_stage(
        "load", [&] { return load_sequence_2d(input_path, ctx.dictionary.topology); });
    VariantSet variants =
        detail::with_stage("lift", [&] { return reconstruct_variants(input, ctx, cfg); });
    detail::with_stage("write", [&] {
      detail::write_variants(out, variants);
      nlohmann::json manifest{{"command", "reconstruct"},
                              {"config", cfg.to_json()},
                              {"input", input_path},
                              {"frames", variants.baseline.size()},
                              {"per_frame", detail::per_frame_manifest(variants.lifts)}};
      detail::write_file(out.file("manifest.json"), manifest.dump(2) + "\n");
      return 0;
    });
    return ReconstructRun{std::move(variants),
                          (std::filesystem::path(cfg.out_dir) / "manifest.json").string()};
  } catch (...) {
    out.discard();
    throw;
  }
}

struct CompareRun {
  CompareResult scores;
  std::string report_csv_path;
};

// Projects ground truth through the configured camera, optionally perturbs
// the 2D input with Gaussian noise, reconstructs every variant and scores
// it against the ground truth, Table-1 style.
inline CompareRun run_compare(const PipelineConfig& cfg, const std::string& gt_path) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("compare: output directory is required");
  detail::OutputTracker out{cfg.out_dir};
  try {
    const PipelineContext ctx = detail::with_stage("load", [&] { return load_context(cfg); });
    const PoseSequence3D gt = detail::with_stage(
        "load", [&] { return load_sequence_3d(gt_path, ctx.dictionary.topology); });

    PoseSequence2D projected = detail::with_stage(
        "project", [&] { return orthographic_project_sequence(gt, cfg.camera.to_camera()); });
    if (cfg.noise_snr_db)
      projected = detail::with_stage("noise", [&] { return add_noise(projected, cfg.noise_spec()); });

    VariantSet variants =
        detail::with_stage("lift", [&] { return reconstruct_variants(projected, ctx, cfg); });
    CompareResult scores = detail::with_stage("score", [&] { return score_variants(variants, gt); });

    std::string report_csv;
    detail::with_stage("write", [&] {
      detail::write_variants(out, variants);
      report_csv = out.file("report.csv");
      save_percentage_table(scores.table, report_csv, Format::csv);

      nlohmann::json methods = nlohmann::json::object();
      for (const auto& [name, report] : scores.method_reports)
        methods[name] = error_report_to_json(report);
      nlohmann::json report_json{{"percentages", percentage_table_to_json(scores.table)},
                                 {"baseline", error_report_to_json(scores.baseline_report)},
                                 {"methods", std::move(methods)}};
      detail::write_file(out.file("report.json"), report_json.dump(2) + "\n");

      nlohmann::json manifest{{"command", "compare"},
                              {"config", cfg.to_json()},
                              {"ground_truth", gt_path},
                              {"frames", gt.size()},
                              {"per_frame", detail::per_frame_manifest(variants.lifts)}};
      detail::write_file(out.file("manifest.json"), manifest.dump(2) + "\n");
      return 0;
    });
    return CompareRun{std::move(scores), std::move(report_csv)};
  } catch (...) {
    out.discard();
    throw;
  }
}

// One aggregated sweep row: reconstruction error of a variant at one SNR.
struct SweepRow {
  double snr_db = 0.0;
  std::string variant;
  double mean_error = 0.0;
  double stdev_error = 0.0;
  double mean_pct_of_baseline = 0.0;
  int trials = 0;
};

// Error-versus-SNR sweep with seeded repeat trials per point.
inline std::vector<SweepRow> run_noise_sweep(const PipelineConfig& cfg, const std::string& gt_path,
                                             const std::vector<double>& snr_points) {
  cfg.validate();
  if (snr_points.empty()) throw ConfigError("noise-sweep: the SNR point list is empty");
  if (cfg.out_dir.empty()) throw ConfigError("noise-sweep: output directory is required");
  detail::OutputTracker out{cfg.out_dir};
  try {
    const PipelineContext ctx = detail::with_stage("load", [&] { return load_context(cfg); });
    const PoseSequence3D gt = detail::with_stage(
        "load", [&] { return load_sequence_3d(gt_path, ctx.dictionary.topology); });
    const PoseSequence2D projected = detail::with_stage(
        "project", [&] { return orthographic_project_sequence(gt, cfg.camera.to_camera()); });

    std::vector<std::string> variant_names{"baseline"};
    for (const auto& f : cfg.filters) variant_names.push_back(f.name());

    // errors[variant][snr][trial]
    std::vector<std::vector<std::vector<double>>> errors(
        variant_names.size(),
        std::vector<std::vector<double>>(snr_points.size()));
    std::vector<std::vector<std::vector<double>>> pct = errors;

    for (std::size_t si = 0; si < snr_points.size(); ++si) {
      for (int trial = 0; trial < cfg.sweep_trials; ++trial) {
        const NoiseSpec spec{snr_points[si],
                             detail::mix_seed(detail::mix_seed(cfg.seed, si), static_cast<std::uint64_t>(trial))};
        const PoseSequence2D noisy =
            detail::with_stage("noise", [&] { return add_noise(projected, spec); });
        const VariantSet variants =
            detail::with_stage("lift", [&] { return reconstruct_variants(noisy, ctx, cfg); });
        const CompareResult scores =
            detail::with_stage("score", [&] { return score_variants(variants, gt); });

        errors[0][si].push_back(scores.baseline_report.mean_error);
        pct[0][si].push_back(100.0);
        for (std::size_t m = 0; m < scores.method_reports.size(); ++m) {
          const double err = scores.method_reports[m].second.mean_error;
          errors[m + 1][si].push_back(err);
          pct[m + 1][si].push_back(scores.baseline_report.mean_error > 0.0
                                       ? 100.0 * err / scores.baseline_report.mean_error
                                       : 100.0);
        }
      }
    }

    std::vector<SweepRow> rows;
    for (std::size_t si = 0; si < snr_points.size(); ++si)
      for (std::size_t v = 0; v < variant_names.size(); ++v) {
        const auto& samples = errors[v][si];
        const auto n = static_cast<double>(samples.size());
        double mean = 0.0;
        for (const double e : samples) mean += e;
        mean /= n;
        double var = 0.0;
        for (const double e : samples) var += (e - mean) * (e - mean);
        const double stdev = samples.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        double mean_pct = 0.0;
        for (const double p : pct[v][si]) mean_pct += p;
        mean_pct /= n;
        rows.push_back(SweepRow{snr_points[si], variant_names[v], mean, stdev, mean_pct,
                                static_cast<int>(samples.size())});
      }

    detail::with_stage("write", [&] {
      std::string csv = "snr_db,variant,mean_error,stdev_error,mean_pct_of_baseline,trials\n";
      for (const auto& r : rows)
        csv += detail::shortest_decimal(r.snr_db) + "," + r.variant + "," +
               detail::shortest_decimal(r.mean_error) + "," + detail::shortest_decimal(r.stdev_error) +
               "," + detail::shortest_decimal(r.mean_pct_of_baseline) + "," +
               std::to_string(r.trials) + "\n";
      detail::write_file(out.file("sweep.csv"), csv);

      nlohmann::json jrows = nlohmann::json::array();
      for (const auto& r : rows)
        jrows.push_back({{"snr_db", r.snr_db},
                         {"variant", r.variant},
                         {"mean_error", r.mean_error},
                         {"stdev_error", r.stdev_error},
                         {"mean_pct_of_baseline", r.mean_pct_of_baseline},
                         {"trials", r.trials}});
      nlohmann::json manifest{{"command", "noise-sweep"},
                              {"config", cfg.to_json()},
                              {"ground_truth", gt_path},
                              {"snr_points", snr_points},
                              {"rows", std::move(jrows)}};
      detail::write_file(out.file("manifest.json"), manifest.dump(2) + "\n");
      return 0;
    });
    return rows;
  } catch (...) {
    out.discard();
    throw;
  }
}

struct BuildDictionaryRun {
  Eigen::Index columns = 0;
  DictionaryBuildReport report;
};

// Reads the grouped corpus named by the manifest, builds the dictionary and
// writes it to `out_path`. Manifest schema:
//   {"groups": {"<group name>": ["file.csv", ...], ...}}
// with file paths relative to `corpus_dir`.
inline BuildDictionaryRun run_build_dictionary(const std::string& corpus_dir,
                                               const std::string& manifest_path,
                                               int bases_per_group, const std::string& out_path,
                                               TopologyPtr csv_topology = nullptr) {
  const nlohmann::json manifest =
      detail::parse_json(detail::read_file(manifest_path), manifest_path);
  if (!manifest.contains("groups") || !manifest.at("groups").is_object())
    throw LoadError(manifest_path + ": expected a 'groups' object");

  std::vector<std::pair<std::string, std::vector<PoseSequence3D>>> corpus;
  for (const auto& [group, files] : manifest.at("groups").items()) {
    if (!files.is_array())
      throw LoadError(manifest_path + ": group '" + group + "' must list files");
    std::vector<PoseSequence3D> seqs;
    for (const auto& f : files) {
      const auto path = (std::filesystem::path(corpus_dir) / f.get<std::string>()).string();
      seqs.push_back(load_sequence_3d(path, csv_topology));
    }
    corpus.emplace_back(group, std::move(seqs));
  }

  BuildDictionaryRun run;
  const PoseDictionary dict = build_dictionary(corpus, bases_per_group, &run.report);
  run.columns = dict.size();
  save_dictionary(dict, out_path);
  return run;
}

}  // namespace poselift
