#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "poselift/io.hpp"
#include "support/synthetic.hpp"

using namespace poselift;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "poselift_io_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("3D sequences round-trip through both formats") {
  const auto dir = scratch_dir("seq3d");
  const auto seq = testsupport::smooth_motion(9, 51);

  for (const auto format : {Format::csv, Format::json}) {
    const auto path = (dir / (format == Format::csv ? "s.csv" : "s.json")).string();
    save_sequence(seq, path, format);
    const auto back = load_sequence_3d(path);
    REQUIRE(back.size() == seq.size());
    CHECK(same_topology(back.topology, seq.topology));
    for (std::size_t t = 0; t < seq.size(); ++t) CHECK(back.frames[t] == seq.frames[t]);
  }
}

TEST_CASE("2D sequences round-trip through both formats") {
  const auto dir = scratch_dir("seq2d");
  const auto seq =
      orthographic_project_sequence(testsupport::smooth_motion(7, 53), CameraParams());

  for (const auto format : {Format::csv, Format::json}) {
    const auto path = (dir / (format == Format::csv ? "s.csv" : "s.json")).string();
    save_sequence(seq, path, format);
    const auto back = load_sequence_2d(path);
    REQUIRE(back.size() == seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) CHECK(back.frames[t] == seq.frames[t]);
  }
}

TEST_CASE("a one-frame 15-joint csv has a header and 15 data rows") {
  const auto dir = scratch_dir("csvshape");
  const auto topo = canonical_topology();
  const PoseSequence3D seq(topo, {testsupport::rest_pose(topo).coords});
  save_sequence(seq, (dir / "one.csv").string(), Format::csv);

  const std::string text = slurp(dir / "one.csv");
  CHECK(text.rfind("frame,joint,x,y,z\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 16);
}

TEST_CASE("csv loader diagnostics") {
  const auto dir = scratch_dir("csvbad");
  const auto topo = canonical_topology();

  SECTION("NaN coordinate names the line") {
    spit(dir / "nan.csv", "frame,joint,x,y,z\n0,hip,0,0,nan\n");
    try {
      load_sequence_3d((dir / "nan.csv").string());
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  SECTION("non-contiguous frame indices") {
    std::string text = "frame,joint,x,y,z\n";
    for (const long frame : {0L, 1L, 3L})
      for (const auto& joint : topo->joints)
        text += std::to_string(frame) + "," + joint + ",0,0.5,1\n";
    spit(dir / "gap.csv", text);
    try {
      load_sequence_3d((dir / "gap.csv").string());
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("not contiguous") != std::string::npos);
    }
  }

  SECTION("unknown joint name") {
    spit(dir / "unknown.csv", "frame,joint,x,y,z\n0,pelvis,0,0,0\n");
    CHECK_THROWS_AS(load_sequence_3d((dir / "unknown.csv").string()), LoadError);
  }

  SECTION("missing joint in a frame") {
    std::string text = "frame,joint,x,y,z\n";
    for (std::size_t j = 0; j + 1 < topo->joints.size(); ++j)
      text += "0," + topo->joints[j] + ",0,0,0\n";
    spit(dir / "missing.csv", text);
    try {
      load_sequence_3d((dir / "missing.csv").string());
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("missing joint") != std::string::npos);
    }
  }

  SECTION("duplicate joint row") {
    spit(dir / "dup.csv", "frame,joint,x,y,z\n0,hip,0,0,0\n0,hip,1,1,1\n");
    CHECK_THROWS_AS(load_sequence_3d((dir / "dup.csv").string()), LoadError);
  }

  SECTION("dims mismatch is caught by the header") {
    const auto seq2d =
        orthographic_project_sequence(testsupport::smooth_motion(3, 55), CameraParams());
    save_sequence(seq2d, (dir / "twod.csv").string(), Format::csv);
    CHECK_THROWS_AS(load_sequence_3d((dir / "twod.csv").string()), LoadError);
  }
}

TEST_CASE("json loader dims mismatch") {
  const auto dir = scratch_dir("jsondims");
  const auto seq2d =
      orthographic_project_sequence(testsupport::smooth_motion(3, 57), CameraParams());
  save_sequence(seq2d, (dir / "twod.json").string(), Format::json);
  CHECK_THROWS_AS(load_sequence_3d((dir / "twod.json").string()), LoadError);
}

TEST_CASE("csv loading against a custom skeleton") {
  const auto dir = scratch_dir("customtopo");
  const auto topo = make_topology({"root", "tip", "end"}, {-1, 0, 1});
  Eigen::MatrixX3d coords(3, 3);
  coords << 0, 0, 0, 1, 0, 0, 2, 0.25, 0;
  const PoseSequence3D seq(topo, {coords});
  save_sequence(seq, (dir / "c.csv").string(), Format::csv);

  const auto back = load_sequence_3d((dir / "c.csv").string(), topo);
  CHECK(back.frames[0] == coords);
  // The canonical skeleton does not know these joints.
  CHECK_THROWS_AS(load_sequence_3d((dir / "c.csv").string()), LoadError);
}

TEST_CASE("dictionaries round-trip exactly") {
  const auto dir = scratch_dir("dict");
  const auto dict = testsupport::random_dictionary(7, 59);
  const auto path = (dir / "d.json").string();
  save_dictionary(dict, path);
  const auto back = load_dictionary(path);
  CHECK(back.mean == dict.mean);
  CHECK(back.basis == dict.basis);
  CHECK(back.group_labels == dict.group_labels);
  CHECK(same_topology(back.topology, dict.topology));
}

TEST_CASE("dictionary loader diagnostics") {
  const auto dir = scratch_dir("dictbad");
  const auto dict = testsupport::random_dictionary(3, 61);
  const auto path = (dir / "d.json").string();
  save_dictionary(dict, path);
  auto j = nlohmann::json::parse(slurp(path));

  SECTION("missing mean") {
    j.erase("mean");
    spit(dir / "bad.json", j.dump());
    try {
      load_dictionary((dir / "bad.json").string());
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("mean") != std::string::npos);
    }
  }

  SECTION("wrong column length names the column") {
    j["basis"][1].get_ref<nlohmann::json::array_t&>().push_back(0.0);
    spit(dir / "bad.json", j.dump());
    try {
      load_dictionary((dir / "bad.json").string());
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("column 1") != std::string::npos);
    }
  }

  SECTION("non-unit column") {
    for (auto& v : j["basis"][0]) v = v.get<double>() * 3.0;
    spit(dir / "bad.json", j.dump());
    CHECK_THROWS_AS(load_dictionary((dir / "bad.json").string()), LoadError);
  }

  SECTION("label count mismatch") {
    j["group_labels"].get_ref<nlohmann::json::array_t&>().pop_back();
    spit(dir / "bad.json", j.dump());
    CHECK_THROWS_AS(load_dictionary((dir / "bad.json").string()), LoadError);
  }
}

TEST_CASE("limits round-trip and diagnostics") {
  const auto dir = scratch_dir("limits");
  const auto topo = canonical_topology();
  const auto model = LimitsModel::conservative_default(*topo);
  const auto path = (dir / "l.json").string();
  save_limits(model, *topo, path);

  const auto back = load_limits(path, *topo);
  CHECK(back.mode == model.mode);
  REQUIRE(back.entries.size() == model.entries.size());
  for (std::size_t i = 0; i < model.entries.size(); ++i) {
    CHECK(back.entries[i].vertex == model.entries[i].vertex);
    CHECK(back.entries[i].end_a == model.entries[i].end_a);
    CHECK(back.entries[i].end_b == model.entries[i].end_b);
    CHECK(back.entries[i].min_deg == model.entries[i].min_deg);
    CHECK(back.entries[i].max_deg == model.entries[i].max_deg);
  }

  SECTION("unknown joint") {
    auto j = nlohmann::json::parse(slurp(path));
    j["entries"][0]["vertex_joint"] = "antenna";
    spit(dir / "bad.json", j.dump());
    CHECK_THROWS_AS(load_limits((dir / "bad.json").string(), *topo), LoadError);
  }

  SECTION("bad mode") {
    auto j = nlohmann::json::parse(slurp(path));
    j["mode"] = "lenient";
    spit(dir / "bad.json", j.dump());
    CHECK_THROWS_AS(load_limits((dir / "bad.json").string(), *topo), LoadError);
  }
}

TEST_CASE("error reports round-trip through json") {
  const auto dir = scratch_dir("report");
  const auto seq = testsupport::smooth_motion(6, 63);
  auto noisy_frames = seq.frames;
  noisy_frames[2](4, 1) += 0.05;
  const auto report = sequence_error(PoseSequence3D(seq.topology, noisy_frames), seq);

  const auto path = (dir / "r.json").string();
  save_error_report(report, path, Format::json);
  const auto back = load_error_report(path);
  CHECK(back.joint_names == report.joint_names);
  CHECK(back.per_joint_error == report.per_joint_error);
  CHECK(back.per_frame_error == report.per_frame_error);
  CHECK(back.mean_error == report.mean_error);

  save_error_report(report, (dir / "r.csv").string(), Format::csv);
  const auto text = slurp(dir / "r.csv");
  CHECK(text.rfind("joint,error\n", 0) == 0);
  CHECK(text.find("AVERAGE,") != std::string::npos);
}

TEST_CASE("percentage tables round-trip and render with two decimals") {
  const auto dir = scratch_dir("table");
  ErrorReport baseline;
  baseline.joint_names = {"a", "b"};
  baseline.per_joint_error = {2.0, 0.0};  // second row undefined
  ErrorReport method = baseline;
  method.per_joint_error = {1.2345, 1.0};
  const auto table = percentage_table(baseline, {{"m", method}});

  const auto jpath = (dir / "t.json").string();
  save_percentage_table(table, jpath, Format::json);
  const auto back = load_percentage_table(jpath);
  CHECK(back.joint_names == table.joint_names);
  CHECK(back.method_names == table.method_names);
  CHECK(back.cells == table.cells);
  CHECK(back.average_row == table.average_row);

  save_percentage_table(table, (dir / "t.csv").string(), Format::csv);
  const auto text = slurp(dir / "t.csv");
  CHECK(text.rfind("joint,baseline,m\n", 0) == 0);
  CHECK(text.find("a,100.00,61.72") != std::string::npos);
  CHECK(text.find("b,n/a,n/a") != std::string::npos);
}

TEST_CASE("topology files round-trip") {
  const auto dir = scratch_dir("topo");
  const auto topo = canonical_topology();
  const auto path = (dir / "skel.json").string();
  save_topology(*topo, path);
  const auto back = load_topology(path);
  CHECK(same_topology(back, topo));
}

TEST_CASE("missing files raise load errors naming the path") {
  try {
    load_sequence_3d("/nonexistent/nope.csv");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
  }
}
