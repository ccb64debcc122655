#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "scenes.hpp"
#include "temp_dir.hpp"
#include "tissuefield/checkpoint.hpp"
#include "tissuefield/trainer.hpp"

namespace tissuefield {
namespace {

using testing::TempDir;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

const Dataset& tiny_dataset() {
  static const Dataset ds = generate_synthetic(testing::tiny_scene());
  return ds;
}

bool same_parameters(const SceneModel<float>& a, const SceneModel<float>& b) {
  const auto pa = a.parameter_blocks();
  const auto pb = b.parameter_blocks();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].size() != pb[i].size() || !std::equal(pa[i].begin(), pa[i].end(), pb[i].begin())) return false;
  }
  return true;
}

TEST(Trainer, ZeroIterationsSavesInitialization) {
  TempDir dir("train_zero");
  const TrainConfig config = testing::tiny_train_config(0);
  const TrainResult result = train(config, tiny_dataset(), dir.str());
  EXPECT_EQ(result.iterations, 0);
  const Checkpoint ckpt = load_checkpoint(result.checkpoint);
  const Trainer fresh(config, tiny_dataset());
  EXPECT_TRUE(same_parameters(ckpt.model, fresh.model()));
  EXPECT_EQ(ckpt.meta.iteration, 0);
  EXPECT_TRUE(read_lines(dir.str("log.ndjson")).empty());
}

TEST(Trainer, LogLineFormat) {
  LossReport r;
  r.l_color = 0.5;
  r.total = 0.75;
  const nlohmann::json j = nlohmann::json::parse(log_line(7, r));
  EXPECT_EQ(j.at("iter").get<int>(), 7);
  EXPECT_EQ(j.at("l_color").get<double>(), 0.5);
  EXPECT_EQ(j.at("total").get<double>(), 0.75);
  for (const char* key : {"l_depth", "l_jac", "l_grad", "l_smooth", "l_tv"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Trainer, RunsAreDeterministic) {
  TempDir a("train_det_a"), b("train_det_b");
  const TrainConfig config = testing::tiny_train_config(5);
  train(config, tiny_dataset(), a.str());
  train(config, tiny_dataset(), b.str());
  const auto la = read_lines(a.str("log.ndjson"));
  EXPECT_EQ(la.size(), 5u);
  EXPECT_EQ(la, read_lines(b.str("log.ndjson")));
  EXPECT_TRUE(same_parameters(load_checkpoint(a.str("checkpoint.bin")).model,
                              load_checkpoint(b.str("checkpoint.bin")).model));
}

TEST(Trainer, ResumeMatchesStraightRun) {
  TempDir straight("train_straight"), resumed("train_resumed");
  TrainConfig config = testing::tiny_train_config(6);
  config.probe_stride = 3;
  train(config, tiny_dataset(), straight.str());

  {
    Trainer partial(config, tiny_dataset());
    std::ofstream log(resumed.str("log.ndjson"));
    for (int i = 0; i < 3; ++i) {
      const long it = partial.iteration();
      log << log_line(it, partial.step().report) << "\n";
    }
    // A stale line past the resume point must be dropped.
    log << log_line(3, LossReport{}) << "\n";
    partial.save(resumed.str("checkpoint.bin"));
  }
  const TrainResult result = train(config, tiny_dataset(), resumed.str(), resumed.str("checkpoint.bin"));
  EXPECT_EQ(result.iterations, 6);

  const auto a = read_lines(straight.str("log.ndjson"));
  const auto b = read_lines(resumed.str("log.ndjson"));
  ASSERT_EQ(a.size(), 6u);
  ASSERT_EQ(b.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const nlohmann::json ja = nlohmann::json::parse(a[i]), jb = nlohmann::json::parse(b[i]);
    EXPECT_EQ(ja.at("iter"), jb.at("iter"));
    for (const char* key : {"l_color", "l_depth", "l_jac", "l_grad", "l_smooth", "l_tv", "total"}) {
      EXPECT_NEAR(ja.at(key).get<double>(), jb.at(key).get<double>(), 1e-5) << key << " at line " << i;
    }
  }
  EXPECT_EQ(load_checkpoint(resumed.str("checkpoint.bin")).meta.iteration, 6);
}

TEST(Trainer, BatchesNeverIncludeMaskedPixels) {
  SyntheticScene scene = testing::tiny_scene();
  scene.mask_rectangle = MaskRectangle{6, 5, {2, 3}, {8, 9}};
  const Dataset clean = generate_synthetic(scene);
  Dataset altered = clean;
  for (FrameRecord& f : altered.frames) {
    for (std::size_t p = 0; p < f.mask.data.size(); ++p) {
      if (f.mask.data[p] < 0.5f) {
        f.depth.data[p] = 1e3f;
        for (int c = 0; c < 3; ++c) f.image.data[3 * p + c] = 1.0f - f.image.data[3 * p + c];
      }
    }
    f.laplacian = color_laplacian(f.image);
  }
  const TrainConfig config = testing::tiny_train_config(10);
  const Trainer a(config, clean), b(config, altered);
  for (long it = 0; it < 10; ++it) {
    const TrainingBatch ba = a.make_batch(it), bb = b.make_batch(it);
    EXPECT_TRUE(std::all_of(ba.mask.begin(), ba.mask.end(), [](double m) { return m == 1.0; }));
    EXPECT_EQ(ba.color, bb.color);
    EXPECT_EQ(ba.depth, bb.depth);
    const LossReport ra = a.evaluate(ba, it), rb = b.evaluate(bb, it);
    EXPECT_EQ(ra.total, rb.total);
    EXPECT_EQ(ra.l_smooth, rb.l_smooth);
  }
}

TEST(Trainer, BatchLayoutAndSamples) {
  const TrainConfig config = testing::tiny_train_config(10);
  const Trainer trainer(config, tiny_dataset());
  const TrainingBatch batch = trainer.make_batch(3);
  EXPECT_EQ(batch.grid.patches, 4);
  EXPECT_EQ(batch.rays.rays(), 64);
  EXPECT_EQ(batch.rays.samples(), 12);
  const PinholeCamera& cam = trainer.camera();
  for (int r = 0; r < batch.rays.rays(); ++r) {
    for (int k = 0; k < 12; ++k) {
      EXPECT_GE(batch.rays.s_values(k, r), cam.near);
      EXPECT_LE(batch.rays.s_values(k, r), cam.far);
      if (k > 0) {
        EXPECT_GT(batch.rays.s_values(k, r), batch.rays.s_values(k - 1, r));
      }
    }
    EXPECT_GE(batch.depth[r], 0.0);
    EXPECT_LE(batch.depth[r], 1.0);
  }
  // Same iteration, same batch.
  EXPECT_EQ(trainer.make_batch(3).color, batch.color);
}

TEST(Trainer, TotalLossTrendsDownward) {
  TempDir dir("train_trend");
  const TrainConfig config = testing::tiny_train_config(200);
  train(config, tiny_dataset(), dir.str());
  std::vector<double> totals;
  for (const std::string& line : read_lines(dir.str("log.ndjson"))) {
    totals.push_back(nlohmann::json::parse(line).at("total").get<double>());
  }
  ASSERT_EQ(totals.size(), 200u);
  // Means over windows of 20 iterations, then the median of successive deltas.
  std::vector<double> means;
  for (int w = 0; w < 10; ++w) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += totals[20 * w + i];
    means.push_back(s / 20.0);
  }
  std::vector<double> deltas;
  for (std::size_t i = 1; i < means.size(); ++i) deltas.push_back(means[i] - means[i - 1]);
  std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2, deltas.end());
  EXPECT_LT(deltas[deltas.size() / 2], 0.0);
  EXPECT_LT(means.back(), means.front());
}

}  // namespace
}  // namespace tissuefield
