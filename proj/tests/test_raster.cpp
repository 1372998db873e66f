#include "octasim/random.hpp"
#include "octasim/raster.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace octasim;

namespace {

// Random forest of short segments inside [0,1]^2 with radii in [r_lo, r_hi] mm.
VesselForest random_forest(Rng& rng, int edges, double r_lo, double r_hi) {
  VesselForest f(3.0);
  NodeId tip = f.add_root(Vec3(rng.uniform(), rng.uniform(), 0.0), r_lo, VesselKind::arterial);
  for (int i = 0; i < edges; ++i) {
    if (rng.uniform() < 0.2 || f.at(tip).child_count == 2) {
      tip = f.add_root(Vec3(rng.uniform(), rng.uniform(), 0.0), r_lo, VesselKind::venous);
    }
    const Vec3 p = f.at(tip).position + Vec3(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(0, 0.01));
    tip = f.add_child(tip, p, rng.uniform(r_lo, r_hi));
  }
  return f;
}

double oracle_pixel(const VesselForest& f, double mm_per_px, double px, double py) {
  double best = 0.0;
  for (const auto& n : f.nodes()) {
    if (n.is_root()) continue;
    const auto& p = f.at(*n.parent);
    const double k = f.mm_per_unit() / mm_per_px;
    // Point-to-segment distance in pixels, computed independently.
    const Eigen::Vector2d a(p.position.x() * k, p.position.y() * k);
    const Eigen::Vector2d b(n.position.x() * k, n.position.y() * k);
    const Eigen::Vector2d q(px, py);
    const Eigen::Vector2d ab = b - a;
    const double t = ab.squaredNorm() > 0 ? std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
    const double dist = (q - (a + t * ab)).norm();
    const double r = n.radius_mm / mm_per_px;
    best = std::max(best, std::clamp(r + 0.5 - dist, 0.0, 1.0));
  }
  return best;
}

}  // namespace

TEST(RenderMip, EmptyForestIsBlack) {
  const VesselForest f;
  const auto img = render_mip(f, 32, 3.0);
  EXPECT_EQ(img.width, 32);
  for (double v : img.data) EXPECT_EQ(v, 0.0);
}

TEST(RenderMip, RejectsBadArguments) {
  const VesselForest f;
  EXPECT_THROW(render_mip(f, 0, 3.0), std::invalid_argument);
  EXPECT_THROW(render_mip(f, 10, 0.0), std::invalid_argument);
}

TEST(RenderMip, HorizontalSegmentRadiusFivePixels) {
  // 300 px over 3 mm: 0.01 mm per pixel, radius 5 px = 0.05 mm.
  VesselForest f(3.0);
  const double yc = 150.5 / 300.0;  // centre of row 150
  const auto root = f.add_root(Vec3(0.0, yc, 0.0), 0.05, VesselKind::arterial);
  f.add_child(root, Vec3(1.0, yc, 0.005), 0.05);
  const auto img = render_mip(f, 300, 3.0);
  for (int x = 0; x < 300; ++x) {
    EXPECT_EQ(img.at(x, 150), 1.0);
    for (int y = 0; y < 300; ++y) {
      if (std::abs(y - 150) > 6) ASSERT_EQ(img.at(x, y), 0.0) << x << "," << y;
    }
  }
  // Distance exactly r: the ramp is half way.
  EXPECT_NEAR(img.at(100, 155), 0.5, 1e-12);
  EXPECT_EQ(img.at(100, 154), 1.0);
}

TEST(RenderMip, RandomForestsMatchBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_forest(rng, 1 + trial % 12, 0.005, 0.08);
    const auto img = render_mip(f, 64, 3.0);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        ASSERT_NEAR(img.at(x, y), oracle_pixel(f, img.mm_per_pixel, x + 0.5, y + 0.5), 1e-6)
            << "trial " << trial << " pixel " << x << "," << y;
      }
    }
  }
}

TEST(RenderLabel, ZeroThresholdEqualsBinarizedMip) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_forest(rng, 30, 0.0025, 0.05);
    const auto mip = render_mip(f, 128, 3.0);
    const auto label = render_label(f, 128, 3.0, LabelDetail{0.0, false});
    EXPECT_EQ(binarize(mip, 0.5).data, label.data);
  }
}

TEST(RenderLabel, ThresholdAboveMaxRadiusIsEmpty) {
  Rng rng(3);
  const auto f = random_forest(rng, 40, 0.0025, 0.008);
  const auto label = render_label(f, 128, 3.0, LabelDetail{0.010, false});
  for (double v : label.data) EXPECT_EQ(v, 0.0);
}

TEST(RenderLabel, MixedRadiiMatchFootprintOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_forest(rng, 25, 0.002, 0.03);
    const LabelDetail detail{rng.uniform(0.0, 0.02), trial % 2 == 0};
    const auto label = render_label(f, 96, 3.0, detail);
    const double mpp = 3.0 / 96;
    for (int y = 0; y < 96; ++y) {
      for (int x = 0; x < 96; ++x) {
        bool inside = false;
        for (const auto& n : f.nodes()) {
          if (n.is_root() || !detail.includes(n.radius_mm)) continue;
          const auto& p = f.at(*n.parent);
          const Eigen::Vector2d a = p.position.head<2>() * 3.0;
          const Eigen::Vector2d b = n.position.head<2>() * 3.0;
          const Eigen::Vector2d q((x + 0.5) * mpp, (y + 0.5) * mpp);
          const Eigen::Vector2d ab = b - a;
          const double t = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
          if ((q - (a + t * ab)).norm() <= n.radius_mm * (1 + 1e-12)) inside = true;
        }
        ASSERT_EQ(label.at(x, y), inside ? 1.0 : 0.0) << trial << " " << x << "," << y;
      }
    }
  }
}

TEST(RenderLabel, PropertyMonotoneInThreshold) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_forest(rng, 40, 0.0025, 0.04);
    RasterImage prev = render_label(f, 128, 3.0, LabelDetail{0.0, true});
    for (double thr = 0.0025; thr < 0.045; thr += 0.0025) {
      const auto cur = render_label(f, 128, 3.0, LabelDetail{thr, false});
      for (std::size_t i = 0; i < cur.size(); ++i) ASSERT_LE(cur.data[i], prev.data[i]);
      prev = cur;
    }
  }
}

TEST(LabelDetail, IncludeEqualBoundary) {
  EXPECT_FALSE((LabelDetail{0.01, false}).includes(0.01));
  EXPECT_TRUE((LabelDetail{0.01, true}).includes(0.01));
}

TEST(Upsample, FactorOneIsIdentity) {
  RasterImage img(3, 2, 0.5);
  img.data = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(upsample_bilinear(img, 1), img);
  EXPECT_THROW(upsample_bilinear(img, 0), std::invalid_argument);
}

TEST(Upsample, ConstantStaysConstant) {
  const RasterImage img(7, 5, 0.1, 0.37);
  const auto up = upsample_bilinear(img, 4);
  EXPECT_EQ(up.width, 28);
  EXPECT_EQ(up.height, 20);
  EXPECT_DOUBLE_EQ(up.mm_per_pixel, 0.025);
  for (double v : up.data) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(Upsample, CornerAlignedRamp) {
  RasterImage img(2, 2, 1.0);
  img.data = {0, 1, 0, 1};
  const auto up = upsample_bilinear(img, 2);
  for (int y = 0; y < 4; ++y) {
    EXPECT_NEAR(up.at(0, y), 0.0, 1e-15);
    EXPECT_NEAR(up.at(1, y), 1.0 / 3, 1e-15);
    EXPECT_NEAR(up.at(2, y), 2.0 / 3, 1e-15);
    EXPECT_NEAR(up.at(3, y), 1.0, 1e-15);
  }
}

TEST(Upsample, FourTimesMaps304To1216) {
  const RasterImage img(304, 304, 3.0 / 304);
  const auto up = upsample_bilinear(img, 4);
  EXPECT_EQ(up.width, 1216);
  EXPECT_EQ(up.height, 1216);
}

TEST(Resize, PreservesConstantsAndRange) {
  Rng rng(6);
  RasterImage img(50, 40, 1.0);
  for (double& v : img.data) v = rng.uniform();
  for (auto [w, h] : {std::pair{13, 10}, std::pair{50, 40}, std::pair{77, 91}, std::pair{1, 1}}) {
    const auto r = resize_bilinear(img, w, h);
    EXPECT_EQ(r.width, w);
    for (double v : r.data) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    const auto c = resize_bilinear(RasterImage(50, 40, 1.0, 0.6), w, h);
    for (double v : c.data) ASSERT_NEAR(v, 0.6, 1e-12);
  }
}

TEST(Resize, HalvingAveragesPairs) {
  RasterImage img(4, 1, 1.0);
  img.data = {0, 1, 0, 1};
  const auto r = resize_bilinear(img, 2, 1);
  // Triangle support 2 centred between input pixels: weights 1/4,3/4,3/4,1/4.
  EXPECT_NEAR(r.at(0, 0), (0 * 0.75 + 1 * 0.75 + 0 * 0.25) / 1.75, 1e-12);
}
