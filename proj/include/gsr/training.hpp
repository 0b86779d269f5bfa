#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gsr/dataset.hpp"
#include "gsr/pipeline.hpp"

namespace gsr {

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;
};

/// Bias-corrected Adam update in place. Moments are sized on first use.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// Global L2 clipping in place; returns the norm before clipping.
double clip_gradients(std::span<double> grads, double clip_norm);

struct AugmentConfig {
  int patch_size = 0;  // 0 keeps the full image
  int scale = 1;       // crop origins are multiples of this
  bool flip = true;
  bool rotate = false;
  double max_rotation_deg = 15.0;
};

/// Crop of size x size at (top, left).
Sample crop(const Sample& sample, int top, int left, int size);
Sample flip_horizontal(const Sample& sample);
/// Nearest-neighbour rotation about the image centre. Pixels that come from
/// outside the frame become invalid depth and zero guide.
Sample rotate(const Sample& sample, double degrees);
/// Optional rotation by U(-max, max) degrees, k-aligned random crop, and a
/// horizontal flip with probability 0.5. Throws std::invalid_argument when
/// the image is smaller than the patch.
Sample augment(const Sample& sample, const AugmentConfig& config, std::mt19937_64& rng);

struct TrainConfig {
  int scale = 8;
  double lambda = 0.1;
  LossKind loss = LossKind::l1;
  double learning_rate = 1e-4;
  double lr_decay_factor = 0.9;
  int lr_decay_every_epochs = 10;
  int batch_size = 8;
  int epochs = 1;
  int max_steps = 0;  // 0: no limit beyond epochs
  double clip_norm = 1.0;
  int patch_size = 0;  // 0: full images
  bool flip = true;
  bool rotate = false;
  std::uint64_t seed = 0;
  FeatureMode features = FeatureMode::learned;
  SolveOptions solve;

  /// Throws std::invalid_argument on non-positive rates or a patch size not divisible by scale.
  void validate() const;
};

struct StepRecord {
  int epoch = 0;
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  int cg_iters = 0;
  double lr = 0.0;
  double mu = 0.0;
};

/// `epoch=<int> step=<int> loss=<%.17g> grad_norm=<%.17g> cg_iters=<int> lr=<%.17g> mu=<%.17g>`
std::string format_record(const StepRecord& record);

struct TrainResult {
  Model model;
  std::vector<StepRecord> log;
};

/// Minibatch training with gradient averaging, clipping and Adam. One random
/// crop per image per epoch; learning rate multiplied by lr_decay_factor every
/// lr_decay_every_epochs epochs. Deterministic for a given config and dataset.
TrainResult train(const TrainConfig& config, const std::vector<Sample>& dataset,
                  const std::function<void(const StepRecord&)>& on_step = {});

/// Same as above, continuing from an existing model.
TrainResult train(const TrainConfig& config, const std::vector<Sample>& dataset, Model initial,
                  const std::function<void(const StepRecord&)>& on_step = {});

/// Mean loss over full (unaugmented) samples.
double evaluate_loss(const Model& model, const std::vector<Sample>& dataset, int k, double lambda, LossKind loss,
                     SolveOptions options = {});

}  // namespace gsr
