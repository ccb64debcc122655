#include <gtest/gtest.h>

#include "scenes.hpp"
#include "temp_dir.hpp"
#include "tissuefield/errors.hpp"
#include "tissuefield/synthetic.hpp"

namespace tissuefield {
namespace {

using testing::TempDir;

SyntheticScene bare_scene(int frames = 3, int size = 24) {
  SyntheticScene s = testing::tiny_scene(frames, size);
  s.blobs.clear();
  s.backdrop.reset();
  s.corruption.reset();
  s.quadrature_steps = 1024;
  return s;
}

TEST(Synthetic, EmptySceneIsBlackWithZeroDepth) {
  const Dataset ds = generate_synthetic(bare_scene());
  ASSERT_EQ(ds.frames.size(), 3u);
  for (const FrameRecord& f : ds.frames) {
    for (float v : f.image.data) EXPECT_EQ(v, 0.0f);
    for (float v : f.depth.data) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Synthetic, StaticBlobGivesIdenticalFrames) {
  SyntheticScene s = bare_scene(4);
  SyntheticBlob b;
  b.center = Eigen::Vector3d(0.0, 0.0, 1.4);
  b.radius = 0.2;
  b.peak = 200.0;
  s.blobs = {b};
  const Dataset ds = generate_synthetic(s);
  for (std::size_t i = 1; i < ds.frames.size(); ++i) {
    EXPECT_EQ(ds.frames[i].image.data, ds.frames[0].image.data);
    EXPECT_EQ(ds.frames[i].depth.data, ds.frames[0].depth.data);
  }
  // Opaque at the center pixel.
  const OracleFrame f = render_oracle(s, 0.0);
  EXPECT_GT(f.acc.at(12, 12), 0.999f);
}

TEST(Synthetic, MotionIsIdentityAtTimeZero) {
  SyntheticBlob b;
  b.motion.a = Eigen::Vector3d(0.3, -0.2, 0.1);
  b.motion.b = Eigen::Vector3d(0.1, 0.2, -0.1);
  const se3::RigidTransform m = b.motion_at(0.0);
  EXPECT_EQ(m.rotation, Eigen::Matrix3d::Identity());
  EXPECT_EQ(m.translation, Eigen::Vector3d::Zero());
  EXPECT_EQ(b.center_at(0.0), b.center);
  // Inverse property: the observed center maps back onto the canonical one.
  const double t = 0.3;
  const se3::RigidTransform mt = b.motion_at(t);
  EXPECT_LT(mt.apply(b.center_at(t) - b.center).norm(), 1e-12);
}

Eigen::Vector2d centroid(const Image& acc) {
  double sum = 0.0;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (int r = 0; r < acc.height; ++r) {
    for (int col = 0; col < acc.width; ++col) {
      const double w = acc.at(r, col);
      sum += w;
      c += w * Eigen::Vector2d(col + 0.5, r + 0.5);
    }
  }
  return c / sum;
}

TEST(Synthetic, CentroidDisplacementMatchesProjectedMotion) {
  SyntheticScene s = bare_scene(8, 64);
  s.camera.fx = s.camera.fy = 64.0;
  SyntheticBlob b;
  b.center = Eigen::Vector3d(0.05, -0.03, 1.5);
  b.radius = 0.08;
  b.peak = 30.0;
  b.motion.a = Eigen::Vector3d(0.0, 0.0, 0.4);
  b.motion.b = Eigen::Vector3d(0.12, 0.06, 0.0);
  s.blobs = {b};
  for (int i = 0; i + 1 < s.frames; ++i) {
    const double t0 = static_cast<double>(i) / s.frames, t1 = static_cast<double>(i + 1) / s.frames;
    const Eigen::Vector2d observed = centroid(render_oracle(s, t1).acc) - centroid(render_oracle(s, t0).acc);
    const Eigen::Vector2d predicted = s.camera.project(b.center_at(t1)) - s.camera.project(b.center_at(t0));
    EXPECT_LT((observed - predicted).norm(), 0.5) << "frames " << i << " -> " << i + 1;
  }
}

TEST(Synthetic, BackdropIsOpaqueAtItsPlane) {
  SyntheticScene s = bare_scene();
  s.backdrop = SyntheticBackdrop{};
  const Ray ray = gen_ray(s.camera, 5, 17, 0.0);
  const RadianceOutput out = render_oracle_ray(s, ray);
  const double spacing = (s.camera.far - s.camera.near) / s.quadrature_steps;
  EXPECT_GT(out.acc, 1.0 - 1e-9);
  EXPECT_NEAR(out.depth, s.backdrop->z / ray.direction.z(), 10 * spacing);
}

TEST(Synthetic, GenerationIsBitDeterministic) {
  SyntheticScene s = testing::tiny_scene(3);
  const Dataset a = generate_synthetic(s), b = generate_synthetic(s);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].image.data, b.frames[i].image.data);
    EXPECT_EQ(a.frames[i].depth.data, b.frames[i].depth.data);
  }
  s.seed = 99;
  EXPECT_NE(generate_synthetic(s).frames[0].depth.data, a.frames[0].depth.data);
}

TEST(Synthetic, DepthCorruptionIsAffineWithoutNoise) {
  SyntheticScene s = testing::tiny_scene(2);
  s.corruption.reset();
  const Dataset clean = generate_synthetic(s);
  s.corruption = DepthCorruption{0.8, 0.1, 0.0};
  const Dataset corrupted = generate_synthetic(s);
  const double range = s.camera.far - s.camera.near;
  for (std::size_t p = 0; p < clean.frames[1].depth.data.size(); ++p) {
    EXPECT_NEAR(corrupted.frames[1].depth.data[p], 0.8 * clean.frames[1].depth.data[p] + 0.1 * range, 1e-6);
  }
}

TEST(Synthetic, MaskRectangleMoves) {
  SyntheticScene s = bare_scene(5, 20);
  s.mask_rectangle = MaskRectangle{3, 2, {1, 1}, {9, 13}};
  const Image first = synthetic_mask(s, 0), last = synthetic_mask(s, 4);
  EXPECT_EQ(first.at(1, 1), 0.0f);
  EXPECT_EQ(first.at(2, 3), 0.0f);
  EXPECT_EQ(first.at(3, 1), 1.0f);
  EXPECT_EQ(last.at(9, 13), 0.0f);
  EXPECT_EQ(last.at(1, 1), 1.0f);
  int zeros = 0;
  for (float v : last.data) zeros += v == 0.0f;
  EXPECT_EQ(zeros, 6);
}

TEST(Synthetic, JsonRoundTripAndValidation) {
  SyntheticScene s = testing::tiny_scene(5);
  s.mask_rectangle = MaskRectangle{3, 2, {1, 1}, {4, 5}};
  s.blobs[0].motion.a = Eigen::Vector3d(0.1, 0.2, 0.3);
  const SyntheticScene back = synthetic_scene_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
  nlohmann::json j = to_json(s);
  j["blobs"][0]["radius"] = -1.0;
  EXPECT_THROW(synthetic_scene_from_json(j), InvalidArgument);
  j = to_json(s);
  j["blob"] = 1;
  EXPECT_THROW(synthetic_scene_from_json(j), InvalidArgument);
}

TEST(Synthetic, WrittenDatasetIngests) {
  TempDir dir("synth");
  const SyntheticScene s = testing::tiny_scene(3);
  generate_synthetic(s, dir.str());
  const Dataset ds = ingest(dir.str());
  ASSERT_EQ(ds.frames.size(), 3u);
  EXPECT_EQ(ds.camera.width, s.camera.width);
  EXPECT_DOUBLE_EQ(ds.frames[2].time, 2.0 / 3.0);
  const Dataset mem = generate_synthetic(s);
  for (std::size_t p = 0; p < mem.frames[1].depth.data.size(); ++p) {
    EXPECT_EQ(ds.frames[1].depth.data[p], mem.frames[1].depth.data[p]);
  }
}

}  // namespace
}  // namespace tissuefield
