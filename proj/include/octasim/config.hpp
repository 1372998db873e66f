#pragma once

// INI configuration for the dataset generator. Sections: [svc], [dvc],
// [simulation], [noise], [render]. Phase keys use the parameter table's
// variable names. Unknown sections or keys are rejected so typos surface.

#include "octasim/graph_io.hpp"
#include "octasim/growth.hpp"
#include "octasim/noise.hpp"
#include "octasim/phase_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace octasim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RenderSettings {
  int img_size = 304;
  int upsample = 4;
  std::vector<double> details_um{0.0, 5.0, 10.0};
  int bit_depth = 8;

  void validate() const {
    if (img_size < 1) throw ConfigError("render.img_size must be >= 1");
    if (upsample < 1) throw ConfigError("render.upsample must be >= 1");
    if (bit_depth != 8 && bit_depth != 16) throw ConfigError("render.bit_depth must be 8 or 16");
    if (details_um.empty()) throw ConfigError("render.detail needs at least one threshold");
    for (double d : details_um) {
      if (!(d >= 0.0)) throw ConfigError("render.detail thresholds must be >= 0");
    }
  }

  friend bool operator==(const RenderSettings&, const RenderSettings&) = default;
};

struct GeneratorConfig {
  PhaseConfig svc = PhaseConfig::svc_defaults();
  PhaseConfig dvc = PhaseConfig::dvc_defaults();
  SimulationSettings simulation;
  NoiseSampling noise;
  BackgroundDensity background;
  RenderSettings render;
  /// Upper bound of the per-sample subtree drop probability; 0 disables removal.
  double subtree_removal_upper = 0.0;

  void validate() const {
    try {
      svc.validate();
      dvc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    render.validate();
    if (!(subtree_removal_upper >= 0.0 && subtree_removal_upper <= 1.0)) {
      throw ConfigError("simulation.subtree_removal must lie in [0, 1]");
    }
    if (!(noise.beta_param_min > 0.0 && noise.beta_param_min <= noise.beta_param_max)) {
      throw ConfigError("noise: need 0 < beta_min <= beta_max");
    }
    if (!(noise.gamma_min >= -1.0 && noise.gamma_min <= noise.gamma_max && noise.gamma_max <= 1.0)) {
      throw ConfigError("noise: need -1 <= gamma_min <= gamma_max <= 1");
    }
    if (!(noise.downsample_min >= 0.25 && noise.downsample_min <= noise.downsample_max &&
          noise.downsample_max <= 1.0)) {
      throw ConfigError("noise: need 0.25 <= s_min <= s_max <= 1");
    }
    for (double l : {noise.lambda_delta, noise.lambda_n, noise.lambda_gamma}) {
      if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("noise: lambda weights must lie in [0, 1]");
    }
    if (!(background.sink_count_factor > 0.0 && background.sink_spacing_factor > 0.0)) {
      throw ConfigError("noise: background factors must be > 0");
    }
    if (simulation.root_count < 1) throw ConfigError("simulation.roots must be >= 1");
    if (!(simulation.fov_mm > 0.0 && simulation.slab_depth > 0.0)) {
      throw ConfigError("simulation: fov_mm and slab_depth must be > 0");
    }
    if (!(simulation.faz_radius_mean_mm >= 0.0 && simulation.faz_radius_std_mm >= 0.0)) {
      throw ConfigError("r_faz: mean and std must be >= 0");
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_config_double(const std::string& key, const std::string& raw) {
  const auto s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected a number, got '" + raw + "'");
  }
  return v;
}

inline int parse_config_int(const std::string& key, const std::string& raw) {
  const auto s = trim(raw);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  }
  return v;
}

inline bool parse_config_bool(const std::string& key, const std::string& raw) {
  const auto s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + raw + "'");
}

inline std::vector<double> parse_config_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_config_double(key, item));
  return out;
}

}  // namespace detail

struct FazRadius {
  double mean_mm = 0.45;
  double std_mm = 0.0;
};

/// Accepts a plain number ("0.45") or "normal(mean, std)".
inline FazRadius parse_faz_radius(const std::string& raw) {
  static const std::regex normal_re(R"(\s*normal\s*\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(raw, m, normal_re)) {
    return FazRadius{detail::parse_config_double("r_faz", m[1].str()), detail::parse_config_double("r_faz", m[2].str())};
  }
  return FazRadius{detail::parse_config_double("r_faz", raw), 0.0};
}

namespace detail {

inline void apply_phase_key(PhaseConfig& p, std::optional<FazRadius>& faz, const std::string& key,
                            const std::string& value) {
  const auto full = p.name + "." + key;
  if (key == "r_faz") {
    faz = parse_faz_radius(value);
  } else if (key == "r_rot") {
    p.rotation_radius_mm = parse_config_double(full, value);
  } else if (key == "I") {
    p.iterations = parse_config_int(full, value);
  } else if (key == "N") {
    p.sinks_per_iteration = parse_config_int(full, value);
  } else if (key == "d") {
    p.segment_length_mm = parse_config_double(full, value);
  } else if (key == "r") {
    p.terminal_radius_mm = parse_config_double(full, value);
  } else if (key == "eps_s") {
    p.sink_spacing_mm = parse_config_double(full, value);
  } else if (key == "eps_k") {
    p.satisfaction_range_mm = parse_config_double(full, value);
  } else if (key == "delta") {
    p.perception_distance_mm = parse_config_double(full, value);
  } else if (key == "gamma") {
    p.perception_angle_deg = parse_config_double(full, value);
  } else if (key == "phi") {
    p.bifurcation_spread_deg = parse_config_double(full, value);
  } else if (key == "omega") {
    p.optimal_direction_weight = parse_config_double(full, value);
  } else if (key == "kappa") {
    p.bifurcation_exponent = parse_config_double(full, value);
  } else if (key == "delta_sigma") {
    p.scale_rate = parse_config_double(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

inline void apply_simulation_key(GeneratorConfig& c, const std::string& key, const std::string& value) {
  auto& s = c.simulation;
  const auto full = "simulation." + key;
  if (key == "fov_mm") {
    s.fov_mm = parse_config_double(full, value);
  } else if (key == "slab_depth") {
    s.slab_depth = parse_config_double(full, value);
  } else if (key == "roots") {
    s.root_count = parse_config_int(full, value);
  } else if (key == "eps_n_calibration") {
    s.eps_n_calibration = parse_config_double(full, value);
  } else if (key == "min_segment_length") {
    s.min_segment_length_mm = parse_config_double(full, value);
  } else if (key == "faz_suppression") {
    s.faz_suppression = parse_config_bool(full, value);
  } else if (key == "subtree_removal") {
    c.subtree_removal_upper = parse_config_double(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

inline void apply_noise_key(GeneratorConfig& c, const std::string& key, const std::string& value) {
  auto& n = c.noise;
  const auto full = "noise." + key;
  if (key == "beta_min") {
    n.beta_param_min = parse_config_double(full, value);
  } else if (key == "beta_max") {
    n.beta_param_max = parse_config_double(full, value);
  } else if (key == "gamma_min") {
    n.gamma_min = parse_config_double(full, value);
  } else if (key == "gamma_max") {
    n.gamma_max = parse_config_double(full, value);
  } else if (key == "s_min") {
    n.downsample_min = parse_config_double(full, value);
  } else if (key == "s_max") {
    n.downsample_max = parse_config_double(full, value);
  } else if (key == "lambda_delta") {
    n.lambda_delta = parse_config_double(full, value);
  } else if (key == "lambda_N") {
    n.lambda_n = parse_config_double(full, value);
  } else if (key == "lambda_Gamma") {
    n.lambda_gamma = parse_config_double(full, value);
  } else if (key == "background_sink_factor") {
    c.background.sink_count_factor = parse_config_double(full, value);
  } else if (key == "background_spacing_factor") {
    c.background.sink_spacing_factor = parse_config_double(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

inline void apply_render_key(RenderSettings& r, const std::string& key, const std::string& value) {
  const auto full = "render." + key;
  if (key == "img_size") {
    r.img_size = parse_config_int(full, value);
  } else if (key == "upsample") {
    r.upsample = parse_config_int(full, value);
  } else if (key == "detail") {
    r.details_um = parse_config_list(full, value);
  } else if (key == "bit_depth") {
    r.bit_depth = parse_config_int(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

}  // namespace detail

/// Parses an INI stream on top of the built-in defaults.
inline GeneratorConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  GeneratorConfig c;
  std::optional<FazRadius> svc_faz;
  std::optional<FazRadius> dvc_faz;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) {
      const auto& value = node.data();
      if (section == "svc") {
        detail::apply_phase_key(c.svc, svc_faz, key, value);
      } else if (section == "dvc") {
        detail::apply_phase_key(c.dvc, dvc_faz, key, value);
      } else if (section == "simulation") {
        detail::apply_simulation_key(c, key, value);
      } else if (section == "noise") {
        detail::apply_noise_key(c, key, value);
      } else if (section == "render") {
        detail::apply_render_key(c.render, key, value);
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  // One FAZ per retina: both phases must agree when both set it.
  if (svc_faz && dvc_faz && (svc_faz->mean_mm != dvc_faz->mean_mm || svc_faz->std_mm != dvc_faz->std_mm)) {
    throw ConfigError("r_faz differs between [svc] and [dvc]");
  }
  if (const auto& faz = svc_faz ? svc_faz : dvc_faz) {
    c.simulation.faz_radius_mean_mm = faz->mean_mm;
    c.simulation.faz_radius_std_mm = faz->std_mm;
  }
  c.validate();
  return c;
}

inline GeneratorConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline GeneratorConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline nlohmann::json to_json(const NoiseSampling& n) {
  return nlohmann::json{{"beta_min", n.beta_param_min}, {"beta_max", n.beta_param_max},
                        {"gamma_min", n.gamma_min},     {"gamma_max", n.gamma_max},
                        {"s_min", n.downsample_min},    {"s_max", n.downsample_max},
                        {"lambda_delta", n.lambda_delta}, {"lambda_N", n.lambda_n},
                        {"lambda_Gamma", n.lambda_gamma}};
}

/// Effective configuration, echoed into every manifest.
inline nlohmann::json to_json(const GeneratorConfig& c) {
  auto noise = to_json(c.noise);
  noise["background_sink_factor"] = c.background.sink_count_factor;
  noise["background_spacing_factor"] = c.background.sink_spacing_factor;
  auto simulation = to_json(c.simulation);
  simulation["subtree_removal"] = c.subtree_removal_upper;
  return nlohmann::json{{"svc", to_json(c.svc)},
                        {"dvc", to_json(c.dvc)},
                        {"simulation", simulation},
                        {"noise", noise},
                        {"render",
                         {{"img_size", c.render.img_size},
                          {"upsample", c.render.upsample},
                          {"detail", c.render.details_um},
                          {"bit_depth", c.render.bit_depth}}}};
}

}  // namespace octasim
