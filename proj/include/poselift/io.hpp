#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poselift/dictionary.hpp"
#include "poselift/error.hpp"
#include "poselift/limits.hpp"
#include "poselift/metrics.hpp"
#include "poselift/pose.hpp"
#include "poselift/topology.hpp"

namespace poselift {

enum class Format { csv, json };

namespace detail {

// Shortest decimal that round-trips to the same double.
inline std::string shortest_decimal(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw LoadError("failed while writing '" + path + "'");
}

inline Format detect_format(const std::string& path, const std::string* content = nullptr) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return Format::csv;
  if (ext == ".json") return Format::json;
  if (content) {
    for (const char c : *content) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
      return c == '{' ? Format::json : Format::csv;
    }
  }
  throw LoadError("cannot determine format of '" + path + "' (expected .csv or .json)");
}

inline nlohmann::json parse_json(const std::string& content, const std::string& path) {
  try {
    return nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

// ---------------------------------------------------------------- topology

inline nlohmann::json topology_to_json(const JointTopology& topo) {
  return nlohmann::json{{"joints", topo.joints}, {"parents", topo.parent}};
}

inline TopologyPtr topology_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("joints") || !j.contains("parents"))
    throw LoadError(where + ": topology must be an object with 'joints' and 'parents'");
  try {
    return make_topology(j.at("joints").get<std::vector<std::string>>(),
                         j.at("parents").get<std::vector<int>>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(where + ": " + e.what());
  } catch (const StructuralError& e) {
    throw LoadError(where + ": " + e.what());
  }
}

inline TopologyPtr load_topology(const std::string& path) {
  return topology_from_json(detail::parse_json(detail::read_file(path), path), path);
}

inline void save_topology(const JointTopology& topo, const std::string& path) {
  detail::write_file(path, topology_to_json(topo).dump(2) + "\n");
}

// --------------------------------------------------------------- sequences

namespace detail {

template <int Dims>
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Dims>;

template <int Dims>
std::string sequence_to_csv(const TopologyPtr& topo, const std::vector<FrameMatrix<Dims>>& frames) {
  std::string out = Dims == 3 ? "frame,joint,x,y,z\n" : "frame,joint,x,y\n";
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (Eigen::Index j = 0; j < frames[t].rows(); ++j) {
      const auto& name = topo->joints[static_cast<std::size_t>(j)];
      if (name.find(',') != std::string::npos)
        throw StructuralError("sequence csv: joint name '" + name + "' contains a comma");
      out += std::to_string(t);
      out += ',';
      out += name;
      for (int a = 0; a < Dims; ++a) {
        out += ',';
        out += shortest_decimal(frames[t](j, a));
      }
      out += '\n';
    }
  return out;
}

template <int Dims>
nlohmann::json sequence_to_json(const TopologyPtr& topo, const std::vector<FrameMatrix<Dims>>& frames) {
  nlohmann::json jframes = nlohmann::json::array();
  for (const auto& f : frames) {
    nlohmann::json jframe = nlohmann::json::array();
    for (Eigen::Index j = 0; j < f.rows(); ++j) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < Dims; ++a) row.push_back(f(j, a));
      jframe.push_back(std::move(row));
    }
    jframes.push_back(std::move(jframe));
  }
  return nlohmann::json{{"topology", topology_to_json(*topo)}, {"frames", std::move(jframes)}};
}

template <int Dims>
std::vector<FrameMatrix<Dims>> sequence_frames_from_csv(const std::string& content,
                                                        const std::string& path,
                                                        const TopologyPtr& topo) {
  const auto p = static_cast<Eigen::Index>(topo->joint_count());
  std::vector<std::string_view> lines;
  {
    std::string_view rest = content;
    while (!rest.empty()) {
      auto nl = rest.find('\n');
      std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest = rest.substr(nl + 1);
    }
  }
  if (lines.empty()) throw LoadError(path + ": empty file");

  const std::string expected_header = Dims == 3 ? "frame,joint,x,y,z" : "frame,joint,x,y";
  if (lines[0] != expected_header)
    throw LoadError(path + ": expected header '" + expected_header + "', got '" +
                    std::string(lines[0]) + "'");

  // frame index -> per-joint filled flags + coordinates
  std::map<long, std::pair<std::vector<bool>, FrameMatrix<Dims>>> by_frame;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string row_id = path + ", line " + std::to_string(li + 1);
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != static_cast<std::size_t>(2 + Dims))
      throw LoadError(row_id + ": expected " + std::to_string(2 + Dims) + " fields");
    long frame = 0;
    {
      const auto s = fields[0];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), frame);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size() || frame < 0)
        throw LoadError(row_id + ": bad frame index '" + std::string(s) + "'");
    }
    const int j = topo->index_of(fields[1]);
    if (j < 0) throw LoadError(row_id + ": unknown joint name '" + std::string(fields[1]) + "'");

    auto it = by_frame.find(frame);
    if (it == by_frame.end())
      it = by_frame.emplace(frame, std::make_pair(std::vector<bool>(topo->joint_count(), false),
                                                  FrameMatrix<Dims>(p, Dims)))
               .first;
    auto& [filled, coords] = it->second;
    if (filled[static_cast<std::size_t>(j)])
      throw LoadError(row_id + ": duplicate row for joint '" + std::string(fields[1]) + "'");
    filled[static_cast<std::size_t>(j)] = true;
    for (int a = 0; a < Dims; ++a) {
      const auto value = parse_double(fields[static_cast<std::size_t>(2 + a)]);
      if (!value || !std::isfinite(*value))
        throw LoadError(row_id + ": non-finite or malformed coordinate '" +
                        std::string(fields[static_cast<std::size_t>(2 + a)]) + "'");
      coords(j, a) = *value;
    }
  }

  std::vector<FrameMatrix<Dims>> frames;
  long expected = 0;
  for (auto& [frame, entry] : by_frame) {
    if (frame != expected)
      throw LoadError(path + ": frame indices not contiguous (expected " +
                      std::to_string(expected) + ", found " + std::to_string(frame) + ")");
    auto& [filled, coords] = entry;
    for (std::size_t j = 0; j < filled.size(); ++j)
      if (!filled[j])
        throw LoadError(path + ": frame " + std::to_string(frame) + " is missing joint '" +
                        topo->joints[j] + "'");
    frames.push_back(std::move(coords));
    ++expected;
  }
  if (frames.empty()) throw LoadError(path + ": no frames");
  return frames;
}

template <int Dims>
std::pair<TopologyPtr, std::vector<FrameMatrix<Dims>>> sequence_from_json(
    const nlohmann::json& j, const std::string& path) {
  if (!j.contains("topology")) throw LoadError(path + ": missing 'topology'");
  if (!j.contains("frames") || !j.at("frames").is_array())
    throw LoadError(path + ": missing 'frames' array");
  TopologyPtr topo = topology_from_json(j.at("topology"), path);
  const auto p = static_cast<Eigen::Index>(topo->joint_count());

  std::vector<FrameMatrix<Dims>> frames;
  for (std::size_t t = 0; t < j.at("frames").size(); ++t) {
    const auto& jframe = j.at("frames")[t];
    const std::string where = path + ", frame " + std::to_string(t);
    if (!jframe.is_array() || jframe.size() != static_cast<std::size_t>(p))
      throw LoadError(where + ": expected " + std::to_string(p) + " joint rows");
    FrameMatrix<Dims> coords(p, Dims);
    for (Eigen::Index jj = 0; jj < p; ++jj) {
      const auto& row = jframe[static_cast<std::size_t>(jj)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(Dims))
        throw LoadError(where + ": joint '" + topo->joints[static_cast<std::size_t>(jj)] +
                        "': expected " + std::to_string(Dims) + " coordinates");
      for (int a = 0; a < Dims; ++a) {
        if (!row[static_cast<std::size_t>(a)].is_number())
          throw LoadError(where + ": non-numeric coordinate");
        const double v = row[static_cast<std::size_t>(a)].get<double>();
        if (!std::isfinite(v)) throw LoadError(where + ": non-finite coordinate");
        coords(jj, a) = v;
      }
    }
    frames.push_back(std::move(coords));
  }
  if (frames.empty()) throw LoadError(path + ": no frames");
  return {std::move(topo), std::move(frames)};
}

}  // namespace detail

inline void save_sequence(const PoseSequence3D& seq, const std::string& path, Format format) {
  if (format == Format::csv)
    detail::write_file(path, detail::sequence_to_csv<3>(seq.topology, seq.frames));
  else
    detail::write_file(path, detail::sequence_to_json<3>(seq.topology, seq.frames).dump(2) + "\n");
}

inline void save_sequence(const PoseSequence2D& seq, const std::string& path, Format format) {
  if (format == Format::csv)
    detail::write_file(path, detail::sequence_to_csv<2>(seq.topology, seq.frames));
  else
    detail::write_file(path, detail::sequence_to_json<2>(seq.topology, seq.frames).dump(2) + "\n");
}

// Loads a 3D sequence. CSV files are interpreted against `csv_topology`
// (the shipped 15-joint skeleton when omitted); JSON files carry their own
// topology, which must match `csv_topology` when one is given.
inline PoseSequence3D load_sequence_3d(const std::string& path, TopologyPtr csv_topology = nullptr) {
  const std::string content = detail::read_file(path);
  if (detail::detect_format(path, &content) == Format::csv) {
    TopologyPtr topo = csv_topology ? csv_topology : canonical_topology();
    return PoseSequence3D(topo, detail::sequence_frames_from_csv<3>(content, path, topo));
  }
  auto [topo, frames] = detail::sequence_from_json<3>(detail::parse_json(content, path), path);
  if (csv_topology && !same_topology(topo, csv_topology))
    throw LoadError(path + ": sequence topology does not match the expected topology");
  return PoseSequence3D(std::move(topo), std::move(frames));
}

inline PoseSequence2D load_sequence_2d(const std::string& path, TopologyPtr csv_topology = nullptr) {
  const std::string content = detail::read_file(path);
  if (detail::detect_format(path, &content) == Format::csv) {
    TopologyPtr topo = csv_topology ? csv_topology : canonical_topology();
    return PoseSequence2D(topo, detail::sequence_frames_from_csv<2>(content, path, topo));
  }
  auto [topo, frames] = detail::sequence_from_json<2>(detail::parse_json(content, path), path);
  if (csv_topology && !same_topology(topo, csv_topology))
    throw LoadError(path + ": sequence topology does not match the expected topology");
  return PoseSequence2D(std::move(topo), std::move(frames));
}

// -------------------------------------------------------------- dictionary

inline void save_dictionary(const PoseDictionary& dict, const std::string& path) {
  nlohmann::json jbasis = nlohmann::json::array();
  for (Eigen::Index c = 0; c < dict.size(); ++c) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index r = 0; r < dict.basis.rows(); ++r) col.push_back(dict.basis(r, c));
    jbasis.push_back(std::move(col));
  }
  nlohmann::json j{{"topology", topology_to_json(*dict.topology)},
                   {"mean", std::vector<double>(dict.mean.data(), dict.mean.data() + dict.mean.size())},
                   {"basis", std::move(jbasis)},
                   {"group_labels", dict.group_labels}};
  detail::write_file(path, j.dump(2) + "\n");
}

inline PoseDictionary load_dictionary(const std::string& path) {
  const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
  for (const char* field : {"topology", "mean", "basis", "group_labels"})
    if (!j.contains(field)) throw LoadError(path + ": missing field '" + field + "'");

  TopologyPtr topo = topology_from_json(j.at("topology"), path);
  const auto dim = static_cast<Eigen::Index>(3 * topo->joint_count());

  std::vector<double> mean_values;
  try {
    mean_values = j.at("mean").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": bad 'mean': " + e.what());
  }
  if (mean_values.size() != static_cast<std::size_t>(dim))
    throw LoadError(path + ": 'mean' has length " + std::to_string(mean_values.size()) +
                    ", expected " + std::to_string(dim));
  Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(mean_values.data(), dim);

  const auto& jbasis = j.at("basis");
  if (!jbasis.is_array()) throw LoadError(path + ": 'basis' must be an array of columns");
  Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(jbasis.size()));
  for (std::size_t c = 0; c < jbasis.size(); ++c) {
    std::vector<double> col;
    try {
      col = jbasis[c].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path + ": bad basis column " + std::to_string(c) + ": " + e.what());
    }
    if (col.size() != static_cast<std::size_t>(dim))
      throw LoadError(path + ": basis column " + std::to_string(c) + " has length " +
                      std::to_string(col.size()) + ", expected " + std::to_string(dim));
    basis.col(static_cast<Eigen::Index>(c)) = Eigen::Map<Eigen::VectorXd>(col.data(), dim);
  }

  std::vector<std::string> labels;
  try {
    labels = j.at("group_labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": bad 'group_labels': " + e.what());
  }

  try {
    return PoseDictionary(std::move(topo), std::move(mean), std::move(basis), std::move(labels));
  } catch (const StructuralError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

// ------------------------------------------------------------------ limits

inline void save_limits(const LimitsModel& model, const JointTopology& topo,
                        const std::string& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : model.entries) {
    const auto name = [&](int j) { return topo.joints[static_cast<std::size_t>(j)]; };
    entries.push_back(nlohmann::json{{"vertex_joint", name(e.vertex)},
                                     {"limb_a", {name(e.end_a), name(e.vertex)}},
                                     {"limb_b", {name(e.vertex), name(e.end_b)}},
                                     {"min_deg", e.min_deg},
                                     {"max_deg", e.max_deg}});
  }
  nlohmann::json j{{"mode", model.mode == LimitsMode::strict ? "strict" : "permissive"},
                   {"entries", std::move(entries)}};
  detail::write_file(path, j.dump(2) + "\n");
}

inline LimitsModel load_limits(const std::string& path, const JointTopology& topo) {
  const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
  LimitsModel model;
  if (!j.contains("mode") || !j.at("mode").is_string())
    throw LoadError(path + ": missing 'mode'");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "strict")
    model.mode = LimitsMode::strict;
  else if (mode == "permissive")
    model.mode = LimitsMode::permissive;
  else
    throw LoadError(path + ": mode must be 'strict' or 'permissive', got '" + mode + "'");

  if (!j.contains("entries") || !j.at("entries").is_array())
    throw LoadError(path + ": missing 'entries' array");
  for (std::size_t i = 0; i < j.at("entries").size(); ++i) {
    const auto& je = j.at("entries")[i];
    const std::string where = path + ", entry " + std::to_string(i);
    const auto joint_index = [&](const nlohmann::json& v, const char* field) {
      if (!v.is_string()) throw LoadError(where + ": " + field + " must be a joint name");
      const int idx = topo.index_of(v.get<std::string>());
      if (idx < 0)
        throw LoadError(where + ": unknown joint '" + v.get<std::string>() + "' in " + field);
      return idx;
    };
    for (const char* field : {"vertex_joint", "limb_a", "limb_b", "min_deg", "max_deg"})
      if (!je.contains(field)) throw LoadError(where + ": missing '" + field + "'");
    if (!je.at("limb_a").is_array() || je.at("limb_a").size() != 2 || !je.at("limb_b").is_array() ||
        je.at("limb_b").size() != 2)
      throw LoadError(where + ": limbs must be [jointA, jointB] pairs");
    if (!je.at("min_deg").is_number() || !je.at("max_deg").is_number())
      throw LoadError(where + ": angle bounds must be numbers");

    HingeLimit e;
    e.vertex = joint_index(je.at("vertex_joint"), "vertex_joint");
    const int a0 = joint_index(je.at("limb_a")[0], "limb_a");
    const int a1 = joint_index(je.at("limb_a")[1], "limb_a");
    const int b0 = joint_index(je.at("limb_b")[0], "limb_b");
    const int b1 = joint_index(je.at("limb_b")[1], "limb_b");
    if (a1 != e.vertex || b0 != e.vertex)
      throw LoadError(where + ": limbs must meet at the vertex joint");
    e.end_a = a0;
    e.end_b = b1;
    e.min_deg = je.at("min_deg").get<double>();
    e.max_deg = je.at("max_deg").get<double>();
    model.entries.push_back(e);
  }
  try {
    model.validate(topo);
  } catch (const StructuralError& e) {
    throw LoadError(path + ": " + e.what());
  }
  return model;
}

// ----------------------------------------------------------------- reports

inline nlohmann::json error_report_to_json(const ErrorReport& report) {
  return nlohmann::json{{"joints", report.joint_names},
                        {"per_joint_error", report.per_joint_error},
                        {"per_frame_error", report.per_frame_error},
                        {"mean_error", report.mean_error}};
}

inline void save_error_report(const ErrorReport& report, const std::string& path, Format format) {
  if (format == Format::json) {
    detail::write_file(path, error_report_to_json(report).dump(2) + "\n");
    return;
  }
  std::string out = "joint,error\n";
  for (std::size_t j = 0; j < report.joint_names.size(); ++j)
    out += report.joint_names[j] + "," + detail::shortest_decimal(report.per_joint_error[j]) + "\n";
  out += "AVERAGE," + detail::shortest_decimal(report.mean_error) + "\n";
  detail::write_file(path, out);
}

inline ErrorReport load_error_report(const std::string& path) {
  const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
  for (const char* field : {"joints", "per_joint_error", "per_frame_error", "mean_error"})
    if (!j.contains(field)) throw LoadError(path + ": missing field '" + field + "'");
  try {
    ErrorReport report;
    report.joint_names = j.at("joints").get<std::vector<std::string>>();
    report.per_joint_error = j.at("per_joint_error").get<std::vector<double>>();
    report.per_frame_error = j.at("per_frame_error").get<std::vector<double>>();
    report.mean_error = j.at("mean_error").get<double>();
    if (report.per_joint_error.size() != report.joint_names.size())
      throw LoadError(path + ": per_joint_error length does not match joints");
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
}

namespace detail {

inline std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json percentage_table_to_json(const PercentageTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : table.cells) {
    nlohmann::json jrow = nlohmann::json::array();
    for (const auto& c : row) c ? jrow.push_back(*c) : jrow.push_back(nullptr);
    cells.push_back(std::move(jrow));
  }
  nlohmann::json avg = nlohmann::json::array();
  for (const auto& c : table.average_row) c ? avg.push_back(*c) : avg.push_back(nullptr);
  return nlohmann::json{{"joints", table.joint_names},
                        {"methods", table.method_names},
                        {"cells", std::move(cells)},
                        {"average", std::move(avg)}};
}

inline void save_percentage_table(const PercentageTable& table, const std::string& path,
                                  Format format) {
  if (format == Format::json) {
    detail::write_file(path, percentage_table_to_json(table).dump(2) + "\n");
    return;
  }
  std::string out = "joint";
  for (const auto& m : table.method_names) out += "," + m;
  out += "\n";
  for (std::size_t j = 0; j < table.joint_names.size(); ++j) {
    out += table.joint_names[j];
    for (const auto& c : table.cells[j]) out += "," + (c ? detail::two_decimals(*c) : "n/a");
    out += "\n";
  }
  out += "AVERAGE";
  for (const auto& c : table.average_row) out += "," + (c ? detail::two_decimals(*c) : "n/a");
  out += "\n";
  detail::write_file(path, out);
}

inline PercentageTable load_percentage_table(const std::string& path) {
  const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
  for (const char* field : {"joints", "methods", "cells", "average"})
    if (!j.contains(field)) throw LoadError(path + ": missing field '" + field + "'");
  try {
    PercentageTable table;
    table.joint_names = j.at("joints").get<std::vector<std::string>>();
    table.method_names = j.at("methods").get<std::vector<std::string>>();
    for (const auto& jrow : j.at("cells")) {
      std::vector<std::optional<double>> row;
      for (const auto& c : jrow)
        row.push_back(c.is_null() ? std::optional<double>{} : std::optional<double>{c.get<double>()});
      table.cells.push_back(std::move(row));
    }
    for (const auto& c : j.at("average"))
      table.average_row.push_back(c.is_null() ? std::optional<double>{}
                                              : std::optional<double>{c.get<double>()});
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
}

}  // namespace poselift
