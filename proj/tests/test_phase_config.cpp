#include "octasim/phase_config.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace octasim;

TEST(PhaseConfig, DefaultsMatchParameterTable) {
  const auto svc = PhaseConfig::svc_defaults();
  EXPECT_EQ(svc.iterations, 100);
  EXPECT_EQ(svc.sinks_per_iteration, 1000);
  EXPECT_EQ(svc.segment_length_mm, 0.1);
  EXPECT_EQ(svc.terminal_radius_mm, 0.0025);
  EXPECT_EQ(svc.sink_spacing_mm, 0.135);
  EXPECT_EQ(svc.satisfaction_range_mm, 0.135);
  EXPECT_EQ(svc.perception_distance_mm, 0.2925);
  EXPECT_EQ(svc.perception_angle_deg, 50.0);
  EXPECT_EQ(svc.bifurcation_spread_deg, 15.0);
  EXPECT_EQ(svc.optimal_direction_weight, 0.3);
  EXPECT_EQ(svc.bifurcation_exponent, 2.55);
  EXPECT_EQ(svc.scale_rate, 0.02);
  EXPECT_EQ(svc.rotation_radius_mm, 1.05);

  const auto dvc = PhaseConfig::dvc_defaults();
  EXPECT_EQ(dvc.iterations, 100);
  EXPECT_EQ(dvc.sinks_per_iteration, 2000);
  EXPECT_EQ(dvc.segment_length_mm, 0.04);
  EXPECT_EQ(dvc.terminal_radius_mm, 0.0025);
  EXPECT_EQ(dvc.sink_spacing_mm, 0.045);
  EXPECT_EQ(dvc.satisfaction_range_mm, 0.045);
  EXPECT_EQ(dvc.perception_distance_mm, 0.0975);
  EXPECT_EQ(dvc.perception_angle_deg, 90.0);
  EXPECT_EQ(dvc.bifurcation_spread_deg, 15.0);
  EXPECT_EQ(dvc.optimal_direction_weight, 0.0);
  EXPECT_EQ(dvc.bifurcation_exponent, 2.9);
  EXPECT_EQ(dvc.scale_rate, 0.02);
  EXPECT_EQ(dvc.rotation_radius_mm, 1.05);
  EXPECT_NO_THROW(svc.validate());
  EXPECT_NO_THROW(dvc.validate());
}

TEST(PhaseConfig, ValidateRejectsOutOfRange) {
  const auto bad = [](auto mutate) {
    auto p = PhaseConfig::svc_defaults();
    mutate(p);
    return p;
  };
  EXPECT_THROW(bad([](PhaseConfig& p) { p.segment_length_mm = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.perception_angle_deg = 180; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.bifurcation_spread_deg = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.optimal_direction_weight = 1.1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.bifurcation_exponent = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.iterations = -1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](PhaseConfig& p) { p.terminal_radius_mm = std::nan(""); }).validate(), std::invalid_argument);
}

TEST(Scaling, Examples) {
  EXPECT_EQ(scaled(0.135, 0, 0.02), 0.135);
  EXPECT_DOUBLE_EQ(scaled(0.2925, 50, 0.02), 0.2925 / 2.0);
  EXPECT_THROW(scaled(1.0, -1, 0.02), std::invalid_argument);
  // sigma = 4 at t = 150: 0.1 / 4 = 0.025 floors to 0.04.
  EXPECT_DOUBLE_EQ(scaled_segment_length(0.1, 150, 0.02), 0.04);
  EXPECT_DOUBLE_EQ(scaled_segment_length(0.1, 0, 0.02), 0.1);
  EXPECT_DOUBLE_EQ(scaled_segment_length(0.1, 50, 0.02), 0.05);
  // Already at the floor: stays.
  EXPECT_DOUBLE_EQ(scaled_segment_length(0.04, 99, 0.02), 0.04);
}

// Property: scaled values are monotone non-increasing in t and exact in sigma.
TEST(Scaling, PropertyMonotoneAndExact) {
  for (double ds : {0.0, 0.01, 0.02, 0.1}) {
    double prev = 1e300;
    double prev_d = 1e300;
    for (int t = 0; t < 300; ++t) {
      const double v = scaled(1.7, t, ds);
      EXPECT_EQ(v, 1.7 / (1.0 + t * ds));
      EXPECT_LE(v, prev);
      prev = v;
      const double d = scaled_segment_length(0.1, t, ds);
      EXPECT_GE(d, 0.04);
      EXPECT_LE(d, prev_d);
      prev_d = d;
    }
  }
}

TEST(EpsilonN, Examples) {
  EXPECT_NEAR(epsilon_n(0.0035), 4.078, 1e-12);
  EXPECT_NEAR(epsilon_n(0.007), 0.02 * 203.9 * 2.0 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(epsilon_n(0.007), 3.0005, 1e-4);
  EXPECT_EQ(epsilon_n(0.0), 0.0);
  EXPECT_LT(epsilon_n(1e-9), 1e-5);
  EXPECT_THROW(epsilon_n(-1.0), std::invalid_argument);
}

TEST(EpsilonN, PeakAtThreePointFiveMicrons) {
  for (double r = 0.0001; r < 0.05; r += 0.0001) EXPECT_LE(epsilon_n(r), epsilon_n_peak + 1e-12);
}
