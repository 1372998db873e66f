#pragma once

#include "octasim/growth.hpp"
#include "octasim/vessel_graph.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace octasim {

inline constexpr std::string_view kGraphCsvHeader = "node_id,parent_id,x,y,z,radius_mm,tree_id,kind";

class GraphParseError : public std::runtime_error {
 public:
  GraphParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::size_t line, const char* field) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw GraphParseError(line, std::string("invalid ") + field + " '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace detail

inline void write_graph_csv(std::ostream& out, const VesselForest& forest) {
  out << kGraphCsvHeader << '\n';
  for (const auto& n : forest.nodes()) {
    out << n.id << ',';
    if (n.parent) out << *n.parent;
    out << ',' << detail::format_double(n.position.x()) << ',' << detail::format_double(n.position.y()) << ','
        << detail::format_double(n.position.z()) << ',' << detail::format_double(n.radius_mm) << ',' << n.tree << ','
        << to_string(n.kind) << '\n';
  }
}

/// Parses the CSV produced by write_graph_csv. Nodes must be listed with
/// dense ids in increasing order and every parent before its children.
inline VesselForest read_graph_csv(std::istream& in, double mm_per_unit = 3.0) {
  VesselForest forest(mm_per_unit);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw GraphParseError(1, "empty graph file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kGraphCsvHeader) throw GraphParseError(line_no, "unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 8) throw GraphParseError(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    const auto id = detail::parse_number<NodeId>(f[0], line_no, "node_id");
    if (id != forest.size()) throw GraphParseError(line_no, "node ids must be dense and increasing");
    const Vec3 pos(detail::parse_number<double>(f[2], line_no, "x"), detail::parse_number<double>(f[3], line_no, "y"),
                   detail::parse_number<double>(f[4], line_no, "z"));
    const auto radius = detail::parse_number<double>(f[5], line_no, "radius_mm");
    const auto tree = detail::parse_number<std::uint32_t>(f[6], line_no, "tree_id");
    VesselKind kind{};
    try {
      kind = parse_vessel_kind(f[7]);
    } catch (const std::invalid_argument& e) {
      throw GraphParseError(line_no, e.what());
    }
    if (f[1].empty()) {
      if (tree != forest.trees().size()) throw GraphParseError(line_no, "root tree_id out of sequence");
      forest.add_root(pos, radius, kind);
      continue;
    }
    const auto parent = detail::parse_number<NodeId>(f[1], line_no, "parent_id");
    if (parent >= id) throw GraphParseError(line_no, "parent must precede child");
    const auto& p = forest.at(parent);
    if (p.child_count >= 2) throw GraphParseError(line_no, "parent already has two children");
    if (p.tree != tree || p.kind != kind) throw GraphParseError(line_no, "tree_id/kind disagree with parent");
    forest.add_child(parent, pos, radius);
  }
  return forest;
}

inline void save_graph_csv(const std::string& path, const VesselForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_graph_csv(out, forest);
  if (!out.flush()) throw std::runtime_error("failed writing " + path);
}

inline VesselForest load_graph_csv(const std::string& path, double mm_per_unit = 3.0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open graph file " + path);
  return read_graph_csv(in, mm_per_unit);
}

inline nlohmann::json to_json(const PhaseConfig& p) {
  return nlohmann::json{{"name", p.name},
                        {"I", p.iterations},
                        {"N", p.sinks_per_iteration},
                        {"d", p.segment_length_mm},
                        {"r", p.terminal_radius_mm},
                        {"eps_s", p.sink_spacing_mm},
                        {"eps_k", p.satisfaction_range_mm},
                        {"delta", p.perception_distance_mm},
                        {"gamma", p.perception_angle_deg},
                        {"phi", p.bifurcation_spread_deg},
                        {"omega", p.optimal_direction_weight},
                        {"kappa", p.bifurcation_exponent},
                        {"delta_sigma", p.scale_rate},
                        {"r_rot", p.rotation_radius_mm}};
}

inline PhaseConfig phase_config_from_json(const nlohmann::json& j) {
  PhaseConfig p;
  p.name = j.at("name").get<std::string>();
  p.iterations = j.at("I").get<int>();
  p.sinks_per_iteration = j.at("N").get<int>();
  p.segment_length_mm = j.at("d").get<double>();
  p.terminal_radius_mm = j.at("r").get<double>();
  p.sink_spacing_mm = j.at("eps_s").get<double>();
  p.satisfaction_range_mm = j.at("eps_k").get<double>();
  p.perception_distance_mm = j.at("delta").get<double>();
  p.perception_angle_deg = j.at("gamma").get<double>();
  p.bifurcation_spread_deg = j.at("phi").get<double>();
  p.optimal_direction_weight = j.at("omega").get<double>();
  p.bifurcation_exponent = j.at("kappa").get<double>();
  p.scale_rate = j.at("delta_sigma").get<double>();
  p.rotation_radius_mm = j.at("r_rot").get<double>();
  return p;
}

inline nlohmann::json to_json(const SimulationSettings& s) {
  return nlohmann::json{{"fov_mm", s.fov_mm},
                        {"slab_depth", s.slab_depth},
                        {"roots", s.root_count},
                        {"r_faz_mean", s.faz_radius_mean_mm},
                        {"r_faz_std", s.faz_radius_std_mm},
                        {"eps_n_calibration", s.eps_n_calibration},
                        {"min_segment_length", s.min_segment_length_mm},
                        {"faz_suppression", s.faz_suppression}};
}

/// Graph sidecar: everything needed to interpret and reproduce the CSV.
inline nlohmann::json graph_manifest(const GrowthState& state, std::span<const PhaseConfig> phases) {
  auto phase_list = nlohmann::json::array();
  for (const auto& p : phases) phase_list.push_back(to_json(p));
  const auto& c = state.faz_center();
  return nlohmann::json{{"seed", state.seed()},
                        {"mm_per_unit", state.mm_per_unit()},
                        {"settings", to_json(state.settings())},
                        {"phases", phase_list},
                        {"scale_history", state.scale_history()},
                        {"faz", {{"radius_mm", state.faz_radius_mm()}, {"center", {c.x(), c.y(), c.z()}}}},
                        {"node_count", state.forest().size()}};
}

}  // namespace octasim
