#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace octasim {

/// Parameters of one growth phase. Lengths in millimetres, angles in degrees.
/// Distance-like values are initial values p(0); they shrink as p(0) / sigma(t).
struct PhaseConfig {
  std::string name = "svc";
  int iterations = 100;                    // I
  int sinks_per_iteration = 1000;          // N
  double segment_length_mm = 0.1;          // d
  double terminal_radius_mm = 0.0025;      // r
  double sink_spacing_mm = 0.135;          // eps_s
  double satisfaction_range_mm = 0.135;    // eps_k
  double perception_distance_mm = 0.2925;  // delta
  double perception_angle_deg = 50.0;      // gamma
  double bifurcation_spread_deg = 15.0;    // phi
  double optimal_direction_weight = 0.3;   // omega
  double bifurcation_exponent = 2.55;      // kappa
  double scale_rate = 0.02;                // delta_sigma
  double rotation_radius_mm = 1.05;        // r_rot

  static PhaseConfig svc_defaults() { return PhaseConfig{}; }

  static PhaseConfig dvc_defaults() {
    PhaseConfig p;
    p.name = "dvc";
    p.iterations = 100;
    p.sinks_per_iteration = 2000;
    p.segment_length_mm = 0.04;
    p.terminal_radius_mm = 0.0025;
    p.sink_spacing_mm = 0.045;
    p.satisfaction_range_mm = 0.045;
    p.perception_distance_mm = 0.0975;
    p.perception_angle_deg = 90.0;
    p.bifurcation_spread_deg = 15.0;
    p.optimal_direction_weight = 0.0;
    p.bifurcation_exponent = 2.9;
    p.scale_rate = 0.02;
    p.rotation_radius_mm = 1.05;
    return p;
  }

  void validate() const {
    const auto fail = [&](const std::string& what) {
      throw std::invalid_argument("phase '" + name + "': " + what);
    };
    if (iterations < 0) fail("I must be >= 0");
    if (sinks_per_iteration < 0) fail("N must be >= 0");
    if (!(segment_length_mm > 0)) fail("d must be > 0");
    if (!(terminal_radius_mm > 0)) fail("r must be > 0");
    if (!(sink_spacing_mm > 0)) fail("eps_s must be > 0");
    if (!(satisfaction_range_mm > 0)) fail("eps_k must be > 0");
    if (!(perception_distance_mm > 0)) fail("delta must be > 0");
    if (!(rotation_radius_mm > 0)) fail("r_rot must be > 0");
    if (!(perception_angle_deg > 0 && perception_angle_deg < 180)) fail("gamma must lie in (0, 180)");
    if (!(bifurcation_spread_deg > 0 && bifurcation_spread_deg < 180)) fail("phi must lie in (0, 180)");
    if (!(optimal_direction_weight >= 0 && optimal_direction_weight <= 1)) fail("omega must lie in [0, 1]");
    if (!(bifurcation_exponent > 1)) fail("kappa must be > 1");
    if (!(scale_rate >= 0)) fail("delta_sigma must be >= 0");
  }

  friend bool operator==(const PhaseConfig&, const PhaseConfig&) = default;
};

inline double scale_factor(int t, double delta_sigma) { return 1.0 + t * delta_sigma; }

/// p(t) = p(0) / (1 + t * delta_sigma)
inline double scaled(double initial, int t, double delta_sigma) {
  if (t < 0) throw std::invalid_argument("scaled: t must be >= 0");
  return initial / scale_factor(t, delta_sigma);
}

/// Segment length shrinks like every distance but never below `floor_mm`
/// (nor grows above its initial value when that is already below the floor).
inline double scaled_segment_length(double initial_mm, int t, double delta_sigma, double floor_mm = 0.04) {
  return std::min(initial_mm, std::max(floor_mm, scaled(initial_mm, t, delta_sigma)));
}

/// Node-to-sink exclusion heuristic as a function of vessel radius (mm):
/// 0.02 * 203.9 * x * exp(1 - x) with x = r / 3.5 um. Returns the raw value;
/// callers apply their unit calibration.
inline double epsilon_n(double radius_mm) {
  if (!(radius_mm >= 0.0)) throw std::invalid_argument("epsilon_n: radius must be >= 0");
  const double x = radius_mm / 0.0035;
  return 0.02 * 203.9 * x * std::exp(1.0 - x);
}

/// Maximum of epsilon_n over all radii (attained at r = 3.5 um).
inline constexpr double epsilon_n_peak = 0.02 * 203.9;

}  // namespace octasim
