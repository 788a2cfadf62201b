#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "poselift/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace poselift;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "poselift_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Dictionary file plus a projected in-span 2D input, written to disk.
struct Fixture {
  fs::path dir;
  std::string dict_path;
  std::string input_path;
  std::string gt_path;
  PoseDictionary dict;
};

Fixture make_fixture(const std::string& name, std::size_t frames = 10) {
  Fixture fx{scratch_dir(name), "", "", "", testsupport::random_dictionary(8, 111)};
  fx.dict_path = (fx.dir / "dict.json").string();
  save_dictionary(fx.dict, fx.dict_path);

  const CameraParams cam = CameraSpec{1.3, {25.0, 40.0, 10.0}}.to_camera();
  std::vector<Eigen::MatrixX3d> gt_frames;
  std::vector<Eigen::MatrixX2d> obs_frames;
  for (std::size_t t = 0; t < frames; ++t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / frames;
    const SparseCode code{{0, 4},
                          Eigen::Vector2d(0.4 * std::sin(phase), 0.3 * std::cos(phase))};
    const Eigen::VectorXd pose = reconstruct_pose(fx.dict, code);
    gt_frames.push_back(Pose3D::unflatten(fx.dict.topology, pose).coords);
    obs_frames.push_back(project(pose, cam));
  }
  const PoseSequence3D gt(fx.dict.topology, gt_frames);
  const PoseSequence2D obs(fx.dict.topology, obs_frames);
  fx.gt_path = (fx.dir / "gt.csv").string();
  fx.input_path = (fx.dir / "input.csv").string();
  save_sequence(gt, fx.gt_path, Format::csv);
  save_sequence(obs, fx.input_path, Format::csv);
  return fx;
}

PipelineConfig base_config(const Fixture& fx, const std::string& out_name) {
  PipelineConfig cfg;
  cfg.dictionary_path = fx.dict_path;
  cfg.lift.anthro_weight = 0.0;
  cfg.filters = {FilterSpec(FilterKind::mma, 5)};
  cfg.out_dir = (fx.dir / out_name).string();
  return cfg;
}

}  // namespace

TEST_CASE("config json parsing") {
  const auto j = nlohmann::json::parse(R"({
    "dictionary": "d.json",
    "limits": "l.json",
    "lift": {"max_bases": 4, "anthro_weight": 0.2},
    "filters": [{"kind": "sma", "window": 3}, {"kind": "ema"}],
    "noise": {"snr_db": 9},
    "seed": 7,
    "out": "outdir",
    "camera": {"scale": 1.5, "euler_deg": [10, 20, 30]}
  })");
  const auto cfg = PipelineConfig::from_json(j);
  CHECK(cfg.dictionary_path == "d.json");
  CHECK(cfg.limits_path == "l.json");
  CHECK(cfg.lift.max_bases == 4);
  CHECK(cfg.lift.anthro_weight == 0.2);
  CHECK(cfg.lift.residual_tol == 1e-8);  // default preserved
  REQUIRE(cfg.filters.size() == 2);
  CHECK(cfg.filters[0].name() == "sma_w3");
  CHECK(cfg.filters[1].name() == "ema_w5");
  CHECK(cfg.noise_snr_db == 9.0);
  CHECK(cfg.noise_spec().seed == 7);
  CHECK(cfg.seed == 7);
  CHECK(cfg.camera.scale == 1.5);

  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"filtres": []})")),
                  ConfigError);

  PipelineConfig no_filters;
  no_filters.dictionary_path = "d.json";
  no_filters.filters.clear();
  CHECK_THROWS_AS(no_filters.validate(), ConfigError);
  no_filters.baseline_only = true;
  CHECK_NOTHROW(no_filters.validate());

  // Round trip through the effective-config echo.
  const auto echoed = PipelineConfig::from_json(cfg.to_json());
  CHECK(echoed.to_json() == cfg.to_json());
}

TEST_CASE("run_reconstruct writes baseline plus one directory per filter") {
  const auto fx = make_fixture("reconstruct");
  const auto cfg = base_config(fx, "out");

  const auto run = run_reconstruct(cfg, fx.input_path);
  CHECK(fs::exists(fx.dir / "out/baseline/sequence.csv"));
  CHECK(fs::exists(fx.dir / "out/baseline/sequence.json"));
  CHECK(fs::exists(fx.dir / "out/mma_w5/sequence.csv"));
  CHECK(fs::exists(fx.dir / "out/mma_w5/sequence.json"));
  CHECK(fs::exists(fx.dir / "out/manifest.json"));
  CHECK(run.variants.smoothed.size() == 1);

  // In-span noise-free input: every per-frame residual is tiny.
  const auto manifest = nlohmann::json::parse(slurp(fx.dir / "out/manifest.json"));
  for (const auto& frame : manifest.at("per_frame")) {
    CHECK(frame.at("residual").get<double>() <= 1e-6);
    CHECK(frame.at("valid").get<bool>());
  }
  CHECK(manifest.at("config").at("lift").at("max_bases").get<int>() == 10);
}

TEST_CASE("reconstruct runs are byte-identical") {
  const auto fx = make_fixture("determinism");
  auto cfg = base_config(fx, "out_a");
  run_reconstruct(cfg, fx.input_path);
  cfg.out_dir = (fx.dir / "out_b").string();
  run_reconstruct(cfg, fx.input_path);

  for (const char* rel : {"baseline/sequence.csv", "baseline/sequence.json",
                          "mma_w5/sequence.csv", "mma_w5/sequence.json"})
    CHECK(slurp(fx.dir / "out_a" / rel) == slurp(fx.dir / "out_b" / rel));
}

TEST_CASE("failed runs leave no partial outputs") {
  const auto fx = make_fixture("cleanup");
  auto cfg = base_config(fx, "out");
  cfg.lift.max_alternations = 0;  // invalid; fails inside the lift stage
  try {
    run_reconstruct(cfg, fx.input_path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("lift") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(fx.dir / "out/baseline/sequence.csv"));
  CHECK_FALSE(fs::exists(fx.dir / "out/manifest.json"));
}

TEST_CASE("run_compare scores variants against ground truth") {
  const auto fx = make_fixture("compare");
  auto cfg = base_config(fx, "out");
  cfg.camera = CameraSpec{1.3, {25.0, 40.0, 10.0}};

  const auto run = run_compare(cfg, fx.gt_path);
  CHECK(run.scores.baseline_report.mean_error >= 0.0);
  CHECK(std::isfinite(run.scores.baseline_report.mean_error));

  // Baseline column pinned at 100 wherever defined.
  for (const auto& row : run.scores.table.cells)
    if (row[0]) CHECK(*row[0] == 100.0);

  CHECK(fs::exists(fx.dir / "out/report.csv"));
  CHECK(fs::exists(fx.dir / "out/report.json"));
  const auto report = nlohmann::json::parse(slurp(fx.dir / "out/report.json"));
  CHECK(report.contains("percentages"));
  CHECK(report.at("methods").contains("mma_w5"));
}

TEST_CASE("four filter kinds with three windows give 13 table columns") {
  const auto fx = make_fixture("manyfilters", 6);
  auto cfg = base_config(fx, "out");
  cfg.filters.clear();
  for (const auto kind : {FilterKind::sma, FilterKind::ema, FilterKind::wma, FilterKind::mma})
    for (const int w : {3, 5, 9}) cfg.filters.emplace_back(kind, w);

  const auto run = run_compare(cfg, fx.gt_path);
  CHECK(run.scores.table.method_names.size() == 13);
}

TEST_CASE("noise sweep rows are deterministic and complete") {
  const auto fx = make_fixture("sweep", 6);
  auto cfg = base_config(fx, "out_a");
  cfg.sweep_trials = 2;
  cfg.seed = 5;

  const auto rows = run_noise_sweep(cfg, fx.gt_path, {9.0, 17.0});
  REQUIRE(rows.size() == 2 * 2);  // 2 SNR points x (baseline + mma)
  for (const auto& r : rows) {
    CHECK(r.trials == 2);
    CHECK(std::isfinite(r.mean_error));
  }
  CHECK(fs::exists(fx.dir / "out_a/sweep.csv"));

  cfg.out_dir = (fx.dir / "out_b").string();
  const auto rows2 = run_noise_sweep(cfg, fx.gt_path, {9.0, 17.0});
  CHECK(slurp(fx.dir / "out_a/sweep.csv") == slurp(fx.dir / "out_b/sweep.csv"));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mean_error == rows2[i].mean_error);
    CHECK(rows[i].stdev_error == rows2[i].stdev_error);
  }

  CHECK_THROWS_AS(run_noise_sweep(cfg, fx.gt_path, {}), ConfigError);
}

TEST_CASE("cli subcommands and exit codes") {
  const auto fx = make_fixture("cli");
  const auto config_path = fx.dir / "config.json";
  {
    PipelineConfig cfg = base_config(fx, "cli_out");
    std::ofstream out(config_path);
    out << cfg.to_json().dump(2);
  }

  const auto run = [&](const std::string& args) {
    const std::string cmd = std::string(POSELIFT_CLI_PATH) + " " + args + " > " +
                            (fx.dir / "stdout.txt").string() + " 2> " +
                            (fx.dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  SECTION("reconstruct and compare succeed") {
    CHECK(run("reconstruct --config " + config_path.string() + " --input " + fx.input_path) == 0);
    CHECK(fs::exists(fx.dir / "cli_out/baseline/sequence.csv"));
    CHECK(fs::exists(fx.dir / "cli_out/mma_w5/sequence.csv"));

    CHECK(run("compare --config " + config_path.string() + " --gt " + fx.gt_path +
              " --cam-scale 1.3 --cam-euler 25 40 10 --out " + (fx.dir / "cmp_out").string()) == 0);
    CHECK(fs::exists(fx.dir / "cmp_out/report.csv"));
  }

  SECTION("usage errors exit with 1") {
    CHECK(run("reconstruct --config " + config_path.string()) == 1);  // missing --input
    CHECK(run("no-such-command") == 1);
  }

  SECTION("data errors exit with 2") {
    PipelineConfig cfg = base_config(fx, "cli_out2");
    cfg.dictionary_path = (fx.dir / "missing_dict.json").string();
    std::ofstream(fx.dir / "bad_config.json") << cfg.to_json().dump(2);
    CHECK(run("reconstruct --config " + (fx.dir / "bad_config.json").string() + " --input " +
              fx.input_path) == 2);
  }

  SECTION("numerical failures exit with 3") {
    // Dictionary whose mean pose is a straight line: the camera fit on the
    // mean is degenerate and lifting fails.
    Eigen::VectorXd line_mean(45);
    for (Eigen::Index j = 0; j < 15; ++j)
      line_mean.segment<3>(3 * j) = Eigen::Vector3d(0.1 * static_cast<double>(j), 0.0, 0.0);
    const PoseDictionary degenerate(fx.dict.topology, line_mean, Eigen::MatrixXd(45, 0), {});
    save_dictionary(degenerate, (fx.dir / "degenerate_dict.json").string());
    PipelineConfig cfg = base_config(fx, "cli_out3");
    cfg.dictionary_path = (fx.dir / "degenerate_dict.json").string();
    std::ofstream(fx.dir / "degenerate_config.json") << cfg.to_json().dump(2);
    CHECK(run("reconstruct --config " + (fx.dir / "degenerate_config.json").string() +
              " --input " + fx.input_path) == 3);
  }
}

TEST_CASE("run_build_dictionary end to end") {
  const auto dir = scratch_dir("builddict");
  const auto corpus = testsupport::smooth_corpus(3, 2, 25, 7);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [name, seqs] : corpus) {
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const std::string file = name + "_" + std::to_string(s) + ".csv";
      save_sequence(seqs[s], (dir / file).string(), Format::csv);
      files.push_back(file);
    }
    groups[name] = files;
  }
  {
    std::ofstream out(dir / "manifest.json");
    out << nlohmann::json{{"groups", groups}}.dump(2);
  }

  const auto run = run_build_dictionary(dir.string(), (dir / "manifest.json").string(), 4,
                                        (dir / "dict.json").string());
  CHECK(run.columns == 12);
  CHECK(run.report.group_columns.size() == 3);
  const auto dict = load_dictionary((dir / "dict.json").string());
  CHECK(dict.size() == 12);

  // Rebuilding produces an identical file.
  const auto first = slurp(dir / "dict.json");
  run_build_dictionary(dir.string(), (dir / "manifest.json").string(), 4,
                       (dir / "dict.json").string());
  CHECK(slurp(dir / "dict.json") == first);

  // A manifest entry pointing nowhere names the missing file.
  groups["extra"] = nlohmann::json::array({"missing.csv"});
  {
    std::ofstream out(dir / "bad_manifest.json");
    out << nlohmann::json{{"groups", groups}}.dump(2);
  }
  try {
    run_build_dictionary(dir.string(), (dir / "bad_manifest.json").string(), 4,
                         (dir / "dict2.json").string());
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}
