#pragma once

// The optimization loop. Each iteration draws one training frame and a set
// of fully unmasked patches from it, samples every ray around its depth
// prior, renders, evaluates all loss terms and takes one Adam step.
//
// All randomness of iteration i is derived from (seed, i), so a run resumed
// from a checkpoint at iteration k replays exactly what a straight run does.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tissuefield/checkpoint.hpp"
#include "tissuefield/config.hpp"
#include "tissuefield/dataset.hpp"
#include "tissuefield/model.hpp"
#include "tissuefield/objective.hpp"
#include "tissuefield/optimizer.hpp"

namespace tissuefield {

/// One iteration's batch, patch-major as ``PatchGrid`` expects.
struct TrainingBatch {
  int frame = 0;
  PatchGrid grid;
  RayBatch<float> rays;
  std::vector<double> color;      // 3 per pixel
  std::vector<double> depth;      // normalized prior depth in [0, 1]
  std::vector<double> mask;       // 1 per pixel
  std::vector<double> laplacian;  // |lap C| per pixel
};

struct StepResult {
  LossReport report;
  double learning_rate = 0.0;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const Dataset& dataset);

  const TrainConfig& config() const { return config_; }
  const PinholeCamera& camera() const { return camera_; }
  long iteration() const { return iteration_; }
  SceneModel<float>& model() { return model_; }
  const SceneModel<float>& model() const { return model_; }
  const Adam& optimizer() const { return optimizer_; }
  const std::vector<int>& frames() const { return train_frames_; }
  /// Depth prior of frame i in scene units, normalized once for the whole video.
  const Image& depth_prior(int frame) const { return prior_[frame]; }

  TrainingBatch make_batch(long iteration) const;
  /// Losses for a batch without touching parameters or gradients.
  LossReport evaluate(const TrainingBatch& batch, long iteration) const;
  /// One optimization step at the current iteration.
  StepResult step();

  CheckpointMeta checkpoint_meta() const;
  void save(const std::string& path) const;
  void resume(const std::string& path);

 private:
  struct Evaluation {
    ForwardPass<float> pass;
    LossReport report;
    BackwardInputs<float> upstream;
  };
  Evaluation compute(const TrainingBatch& batch, long iteration, bool gradients) const;

  TrainConfig config_;
  const Dataset* dataset_;
  PinholeCamera camera_;
  std::vector<Image> prior_;
  std::vector<int> train_frames_;
  SceneModel<float> model_;
  Adam optimizer_;
  long iteration_ = 0;
};

struct TrainResult {
  std::string checkpoint;
  long iterations = 0;
  std::optional<LossReport> last;
};

using ProgressCallback = std::function<void(long iteration, const LossReport& report)>;

/// Runs the loop to ``config.iterations``, writing ``out_dir/log.ndjson`` and
/// ``out_dir/checkpoint.{bin,json}``. With ``resume`` the run continues from that
/// checkpoint and log lines from its iteration onward are rewritten.
TrainResult train(const TrainConfig& config, const Dataset& dataset, const std::string& out_dir,
                  const std::string& resume = {}, const ProgressCallback& progress = {});

/// One NDJSON log line for an iteration.
std::string log_line(long iteration, const LossReport& report);

}  // namespace tissuefield
