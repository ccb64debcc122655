#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "temp_dir.hpp"
#include "tissuefield/dataset.hpp"
#include "tissuefield/errors.hpp"
#include "tissuefield/image_io.hpp"

namespace tissuefield {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

Image random_image(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(w, h, c);
  for (float& v : img.data) v = u(rng);
  return img;
}

Dataset small_dataset(int frames, int w = 8, int h = 6) {
  Dataset ds;
  ds.camera.fx = ds.camera.fy = 10;
  ds.camera.cx = w / 2.0;
  ds.camera.cy = h / 2.0;
  ds.camera.width = w;
  ds.camera.height = h;
  ds.camera.near = 0.5;
  ds.camera.far = 2.0;
  for (int i = 0; i < frames; ++i) {
    FrameRecord f;
    f.index = i;
    f.image = random_image(w, h, 3, 10 + i);
    f.mask = Image(w, h, 1, 1.0f);
    f.mask.at(1, 2) = 0.0f;
    f.depth = random_image(w, h, 1, 100 + i, 1.0f, 5.0f);
    ds.frames.push_back(f);
  }
  return ds;
}

TEST(ImageIo, PngRoundTripQuantizes) {
  TempDir dir("png");
  const Image img = random_image(7, 5, 3, 1);
  write_png(dir.str("a.png"), img);
  const Image back = read_png(dir.str("a.png"), 3);
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 0.5f / 255.0f + 1e-6f);
  write_png(dir.str("b.png"), back);
  EXPECT_EQ(read_png(dir.str("b.png"), 3).data, back.data);
}

TEST(ImageIo, PngGrayConversion) {
  TempDir dir("gray");
  Image g(4, 3, 1, 0.0f);
  g.at(1, 2) = 1.0f;
  write_png(dir.str("g.png"), g);
  const Image back = read_png(dir.str("g.png"), 1);
  EXPECT_EQ(back.channels, 1);
  EXPECT_EQ(back.at(1, 2), 1.0f);
  EXPECT_EQ(back.at(0, 0), 0.0f);
}

TEST(ImageIo, PfmRoundTripIsExact) {
  TempDir dir("pfm");
  const Image d = random_image(6, 4, 1, 2, -3.0f, 9.0f);
  write_pfm(dir.str("d.pfm"), d);
  EXPECT_EQ(read_pfm(dir.str("d.pfm")).data, d.data);
}

TEST(ImageIo, PfmReadsBigEndianBottomUp) {
  TempDir dir("pfm_be");
  const std::string path = dir.str("be.pfm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "Pf\n2 2\n1.0\n";
    // Bottom row first: values 3, 4 then top row 1, 2.
    for (float v : {3.0f, 4.0f, 1.0f, 2.0f}) {
      unsigned char b[4];
      std::memcpy(b, &v, 4);
      const unsigned char be[4] = {b[3], b[2], b[1], b[0]};
      out.write(reinterpret_cast<const char*>(be), 4);
    }
  }
  const Image d = read_pfm(path);
  EXPECT_EQ(d.at(0, 0), 1.0f);
  EXPECT_EQ(d.at(0, 1), 2.0f);
  EXPECT_EQ(d.at(1, 0), 3.0f);
  EXPECT_EQ(d.at(1, 1), 4.0f);
}

TEST(ImageIo, MissingFileThrows) {
  EXPECT_THROW(read_png("/nonexistent/x.png", 3), IoError);
  EXPECT_THROW(read_pfm("/nonexistent/x.pfm"), IoError);
}

TEST(Dataset, WriteIngestRoundTripsBitwise) {
  TempDir dir("roundtrip");
  write_dataset(dir.str("a"), small_dataset(3));
  const Dataset first = ingest(dir.str("a"));
  write_dataset(dir.str("b"), first);
  const Dataset second = ingest(dir.str("b"));
  ASSERT_EQ(first.frames.size(), second.frames.size());
  for (std::size_t i = 0; i < first.frames.size(); ++i) {
    EXPECT_EQ(first.frames[i].image.data, second.frames[i].image.data);
    EXPECT_EQ(first.frames[i].mask.data, second.frames[i].mask.data);
    EXPECT_EQ(first.frames[i].depth.data, second.frames[i].depth.data);
    EXPECT_EQ(first.frames[i].laplacian.data, second.frames[i].laplacian.data);
    EXPECT_EQ(first.frames[i].time, second.frames[i].time);
  }
  EXPECT_EQ(first.frames[0].mask.at(1, 2), 0.0f);
  EXPECT_EQ(first.camera.fx, 10.0);
}

TEST(Dataset, MissingMaskNamesThePath) {
  TempDir dir("missing");
  write_dataset(dir.str(), small_dataset(3));
  fs::remove(mask_path(dir.str(), 1));
  try {
    ingest(dir.str());
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.path(), mask_path(dir.str(), 1));
    EXPECT_NE(std::string(e.what()).find("000001.png"), std::string::npos);
  }
}

TEST(Dataset, DimensionMismatchIsValidationError) {
  TempDir dir("dims");
  write_dataset(dir.str(), small_dataset(2));
  write_png(frame_path(dir.str(), 1), Image(5, 5, 3, 0.5f));
  EXPECT_THROW(ingest(dir.str()), ValidationError);
}

TEST(Dataset, SingleFrameIsRejected) {
  TempDir dir("single");
  write_dataset(dir.str(), small_dataset(1));
  EXPECT_THROW(ingest(dir.str()), ValidationError);
}

TEST(Dataset, SeventyFrameTimes) {
  TempDir dir("seventy");
  write_dataset(dir.str(), small_dataset(70, 4, 4));
  const Dataset ds = ingest(dir.str());
  ASSERT_EQ(ds.frames.size(), 70u);
  for (int i = 0; i < 70; ++i) {
    EXPECT_EQ(ds.frames[i].index, i);
    EXPECT_EQ(ds.frames[i].time, static_cast<double>(i) / 70.0);
  }
  EXPECT_LT(ds.frames.back().time, 1.0);
}

TEST(Dataset, NonBinaryMaskIsBinarized) {
  TempDir dir("binarize");
  Dataset ds = small_dataset(2);
  ds.frames[0].mask.at(0, 0) = 0.3f;
  ds.frames[0].mask.at(0, 1) = 0.7f;
  write_dataset(dir.str(), ds);
  const Dataset back = ingest(dir.str());
  EXPECT_EQ(back.frames[0].mask.at(0, 0), 0.0f);
  EXPECT_EQ(back.frames[0].mask.at(0, 1), 1.0f);
}

TEST(Dataset, LaplacianOfLinearImageVanishesInside) {
  Image img(6, 6, 3);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = 0.1f * r + 0.05f * c * (ch + 1);
    }
  }
  const Image lap = color_laplacian(img);
  for (int r = 1; r < 5; ++r) {
    for (int c = 1; c < 5; ++c) EXPECT_NEAR(lap.at(r, c), 0.0f, 1e-6f);
  }
}

TEST(Percentile, MatchesSortOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 7.0);
  std::vector<double> v(101);
  for (double& x : v) x = u(rng);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  // With 101 values, percentile q sits exactly on sorted index q.
  EXPECT_NEAR(percentile(v, 2.0), sorted[2], 1e-12);
  EXPECT_NEAR(percentile(v, 98.0), sorted[98], 1e-12);
  EXPECT_NEAR(percentile(v, 50.0), sorted[50], 1e-12);
  EXPECT_NEAR(percentile({1.0, 3.0}, 25.0), 1.5, 1e-12);
}

std::vector<Image> ones_masks(const std::vector<Image>& depths) {
  std::vector<Image> m;
  for (const Image& d : depths) m.emplace_back(d.width, d.height, 1, 1.0f);
  return m;
}

TEST(NormalizeDepth, IdentityWhenPercentilesMatchBounds) {
  // Values 0..100: the 2nd and 98th percentiles are exactly 2 and 98.
  Image d(101, 1, 1);
  for (int i = 0; i < 101; ++i) d.at(0, i) = static_cast<float>(i);
  const std::vector<Image> out = normalize_depth({d}, ones_masks({d}), 2.0, 98.0);
  for (int i = 0; i < 101; ++i) EXPECT_NEAR(out[0].at(0, i), std::clamp(i, 2, 98), 1e-6);
}

TEST(NormalizeDepth, AffineInvariant) {
  const std::vector<Image> ref = {random_image(9, 7, 1, 8, 0.0f, 1.0f), random_image(9, 7, 1, 9, 0.0f, 1.0f)};
  std::vector<Image> scaled = ref;
  for (Image& img : scaled) {
    for (float& v : img.data) v = 2.0f * v + 5.0f;
  }
  const auto a = normalize_depth(ref, ones_masks(ref), 0.5, 2.5);
  const auto b = normalize_depth(scaled, ones_masks(ref), 0.5, 2.5);
  for (std::size_t f = 0; f < a.size(); ++f) {
    for (std::size_t i = 0; i < a[f].data.size(); ++i) EXPECT_NEAR(a[f].data[i], b[f].data[i], 1e-5);
  }
}

TEST(NormalizeDepth, PercentileTargetsAgainstSortOracle) {
  const std::vector<Image> d = {random_image(10, 10, 1, 11, 0.0f, 4.0f), random_image(10, 10, 1, 12, 0.0f, 4.0f)};
  std::vector<Image> masks = ones_masks(d);
  masks[1].at(3, 3) = 0.0f;
  std::vector<double> values;
  for (std::size_t f = 0; f < d.size(); ++f) {
    for (std::size_t i = 0; i < d[f].data.size(); ++i) {
      if (masks[f].data[i] > 0.5f) values.push_back(d[f].data[i]);
    }
  }
  std::sort(values.begin(), values.end());
  auto oracle = [&](double q) {
    const double pos = q / 100.0 * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    return values[lo] + (pos - lo) * (values[lo + 1] - values[lo]);
  };
  const double p2 = oracle(2.0), p98 = oracle(98.0);
  const double near = 1.0, far = 3.0;
  const auto out = normalize_depth(d, masks, near, far);
  for (std::size_t f = 0; f < d.size(); ++f) {
    for (std::size_t i = 0; i < d[f].data.size(); ++i) {
      const double expected = std::clamp(near + (d[f].data[i] - p2) / (p98 - p2) * (far - near), near, far);
      EXPECT_NEAR(out[f].data[i], expected, 1e-5);
    }
  }
}

TEST(NormalizeDepth, ConstantDepthIsDegenerate) {
  const std::vector<Image> d = {Image(4, 4, 1, 2.0f)};
  EXPECT_THROW(normalize_depth(d, ones_masks(d), 0.5, 2.0), NormalizationError);
}

}  // namespace
}  // namespace tissuefield
