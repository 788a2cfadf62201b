// Command-line front end for the poselift pipeline:
//   poselift build-dict   build a basis-pose dictionary from a mocap corpus
//   poselift reconstruct  lift a 2D sequence and smooth it
//   poselift compare      score reconstructions against ground truth
//   poselift noise-sweep  reconstruction error versus Gaussian SNR

#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "poselift/poselift.hpp"

namespace {

int exit_code(poselift::ErrorKind kind) {
  switch (kind) {
    case poselift::ErrorKind::config: return 1;
    case poselift::ErrorKind::data: return 2;
    case poselift::ErrorKind::numeric: return 3;
  }
  return 3;
}

struct CommonOverrides {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> filter_kinds;
  std::vector<int> windows;
  bool baseline_only = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "pipeline configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd.add_option("--out", out_dir, "output directory (overrides config)");
    cmd.add_option("--seed", seed, "seed (overrides config)");
    cmd.add_option("--filter", filter_kinds, "filter kind: sma, ema, wma or mma (repeatable)");
    cmd.add_option("--window", windows, "filter window (repeatable)");
    cmd.add_flag("--baseline-only", baseline_only, "skip smoothing, emit only the lifted baseline");
  }

  poselift::PipelineConfig resolve() const {
    auto cfg = poselift::PipelineConfig::from_json_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (baseline_only) {
      cfg.baseline_only = true;
      cfg.filters.clear();
    } else if (!filter_kinds.empty() || !windows.empty()) {
      // Cross product of requested kinds and windows; a missing side falls
      // back to the distinct values from the config.
      std::vector<poselift::FilterKind> kinds;
      if (filter_kinds.empty()) {
        for (const auto& f : cfg.filters)
          if (std::find(kinds.begin(), kinds.end(), f.kind) == kinds.end()) kinds.push_back(f.kind);
      } else {
        for (const auto& name : filter_kinds)
          kinds.push_back(poselift::filter_kind_from_string(name));
      }
      std::vector<int> ws = windows;
      if (ws.empty())
        for (const auto& f : cfg.filters)
          if (std::find(ws.begin(), ws.end(), f.window) == ws.end()) ws.push_back(f.window);
      cfg.filters.clear();
      for (const auto kind : kinds)
        for (const int w : ws) cfg.filters.emplace_back(kind, w);
    }
    return cfg;
  }
};

void apply_camera_flags(poselift::PipelineConfig& cfg, const std::optional<double>& cam_scale,
                        const std::vector<double>& cam_euler) {
  if (cam_scale) cfg.camera.scale = *cam_scale;
  if (!cam_euler.empty()) {
    if (cam_euler.size() != 3)
      throw poselift::ConfigError("--cam-euler needs exactly three angles (degrees)");
    std::copy(cam_euler.begin(), cam_euler.end(), cfg.camera.euler_deg.begin());
  }
}

void print_table(const poselift::PercentageTable& table) {
  std::printf("%-14s", "joint");
  for (const auto& m : table.method_names) std::printf("  %12s", m.c_str());
  std::printf("\n");
  const auto print_row = [&](const std::string& name,
                             const std::vector<std::optional<double>>& row) {
    std::printf("%-14s", name.c_str());
    for (const auto& cell : row) {
      if (cell)
        std::printf("  %11.2f%%", *cell);
      else
        std::printf("  %12s", "n/a");
    }
    std::printf("\n");
  };
  for (std::size_t j = 0; j < table.joint_names.size(); ++j)
    print_row(table.joint_names[j], table.cells[j]);
  print_row("AVERAGE", table.average_row);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-temporal 3D human pose reconstruction from 2D pose sequences"};
  app.require_subcommand(1);

  // ---- build-dict
  auto* build = app.add_subcommand("build-dict", "build a basis-pose dictionary from a corpus");
  std::string corpus_dir, manifest_path, dict_out, skeleton_path;
  int bases_per_group = 12;
  build->add_option("--corpus", corpus_dir, "directory of 3D sequence files")
      ->required()
      ->check(CLI::ExistingDirectory);
  build->add_option("--manifest", manifest_path, "JSON manifest mapping groups to files")
      ->required()
      ->check(CLI::ExistingFile);
  build->add_option("--bases-per-group", bases_per_group, "principal directions kept per group");
  build->add_option("--out", dict_out, "output dictionary path")->required();
  build->add_option("--skeleton", skeleton_path, "topology JSON for interpreting CSV files");

  // ---- reconstruct
  auto* reconstruct = app.add_subcommand("reconstruct", "lift a 2D sequence and smooth it");
  CommonOverrides rec_opts;
  rec_opts.attach(*reconstruct);
  std::string input_path;
  reconstruct->add_option("--input", input_path, "2D pose sequence (CSV or JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  // ---- compare
  auto* compare = app.add_subcommand("compare", "project ground truth, reconstruct and score");
  CommonOverrides cmp_opts;
  cmp_opts.attach(*compare);
  std::string gt_path;
  std::optional<double> cmp_snr;
  std::optional<double> cam_scale;
  std::vector<double> cam_euler;
  compare->add_option("--gt", gt_path, "ground-truth 3D sequence")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--snr", cmp_snr, "add Gaussian noise at this SNR (dB) before lifting");
  compare->add_option("--cam-scale", cam_scale, "projection camera scale");
  compare->add_option("--cam-euler", cam_euler, "projection camera Euler angles (deg, x y z)")
      ->expected(3);

  // ---- noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "reconstruction error versus SNR");
  CommonOverrides sweep_opts;
  sweep_opts.attach(*sweep);
  std::string sweep_gt_path;
  std::vector<double> snr_points;
  std::optional<int> trials;
  std::optional<double> sweep_cam_scale;
  std::vector<double> sweep_cam_euler;
  sweep->add_option("--gt", sweep_gt_path, "ground-truth 3D sequence")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--snr", snr_points, "SNR points in dB (repeatable; default 1 9 17)");
  sweep->add_option("--trials", trials, "repeat trials per SNR point");
  sweep->add_option("--cam-scale", sweep_cam_scale, "projection camera scale");
  sweep->add_option("--cam-euler", sweep_cam_euler, "projection camera Euler angles (deg, x y z)")
      ->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit cleanly, usage errors map to 1
  }

  try {
    if (build->parsed()) {
      poselift::TopologyPtr topo;
      if (!skeleton_path.empty()) topo = poselift::load_topology(skeleton_path);
      const auto run = poselift::run_build_dictionary(corpus_dir, manifest_path, bases_per_group,
                                                      dict_out, topo);
      for (const auto& w : run.report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("dictionary: %lld columns -> %s\n", static_cast<long long>(run.columns),
                  dict_out.c_str());
      for (const auto& [group, count] : run.report.group_columns)
        std::printf("  %-20s %d columns\n", group.c_str(), count);
      return 0;
    }

    if (reconstruct->parsed()) {
      const auto cfg = rec_opts.resolve();
      const auto run = poselift::run_reconstruct(cfg, input_path);
      std::printf("lifted %zu frames -> %s\n", run.variants.baseline.size(), cfg.out_dir.c_str());
      std::printf("  baseline\n");
      for (const auto& [name, seq] : run.variants.smoothed) std::printf("  %s\n", name.c_str());
      return 0;
    }

    if (compare->parsed()) {
      auto cfg = cmp_opts.resolve();
      if (cmp_snr) cfg.noise_snr_db = cmp_snr;
      apply_camera_flags(cfg, cam_scale, cam_euler);
      const auto run = poselift::run_compare(cfg, gt_path);
      print_table(run.scores.table);
      std::printf("\nbaseline mean error: %.6g\n", run.scores.baseline_report.mean_error);
      std::printf("report: %s\n", run.report_csv_path.c_str());
      return 0;
    }

    if (sweep->parsed()) {
      auto cfg = sweep_opts.resolve();
      if (trials) cfg.sweep_trials = *trials;
      apply_camera_flags(cfg, sweep_cam_scale, sweep_cam_euler);
      const auto points = poselift::snr_sweep_points(
          snr_points.empty() ? std::nullopt : std::optional(snr_points));
      const auto rows = poselift::run_noise_sweep(cfg, sweep_gt_path, points);
      std::printf("%8s  %-12s  %12s  %12s  %8s\n", "snr_db", "variant", "mean_error", "stdev",
                  "pct_base");
      for (const auto& r : rows)
        std::printf("%8.2f  %-12s  %12.6g  %12.6g  %7.2f%%\n", r.snr_db, r.variant.c_str(),
                    r.mean_error, r.stdev_error, r.mean_pct_of_baseline);
      return 0;
    }
  } catch (const poselift::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
