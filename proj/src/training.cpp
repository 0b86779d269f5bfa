#include "gsr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace gsr {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
  for (std::size_t n = 0; n < params.size(); ++n) {
    double& m = state.first_moment[n];
    double& v = state.second_moment[n];
    m = AdamState::beta1 * m + (1.0 - AdamState::beta1) * grads[n];
    v = AdamState::beta2 * v + (1.0 - AdamState::beta2) * grads[n] * grads[n];
    params[n] -= lr * (m / c1) / (std::sqrt(v / c2) + AdamState::epsilon);
  }
}

double clip_gradients(std::span<double> grads, double clip_norm) {
  const double norm = std::sqrt(std::inner_product(grads.begin(), grads.end(), grads.begin(), 0.0));
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    for (double& g : grads) g *= factor;
  }
  return norm;
}

Sample crop(const Sample& sample, int top, int left, int size) {
  const int h = sample.depth.height, w = sample.depth.width;
  if (top < 0 || left < 0 || top + size > h || left + size > w) throw std::invalid_argument("crop: out of bounds");
  Sample out;
  out.id = sample.id;
  out.guide = GuideImage(size, size, sample.guide.channels);
  out.depth = TargetImage(size, size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const std::size_t src = static_cast<std::size_t>(top + i) * w + left + j;
      const std::size_t dst = static_cast<std::size_t>(i) * size + j;
      out.depth.data[dst] = sample.depth.data[src];
      out.depth.valid[dst] = sample.depth.valid[src];
      for (int c = 0; c < sample.guide.channels; ++c) out.guide.at(c, i, j) = sample.guide.at(c, top + i, left + j);
    }
  return out;
}

Sample flip_horizontal(const Sample& sample) {
  Sample out = sample;
  const int h = sample.depth.height, w = sample.depth.width;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const std::size_t src = static_cast<std::size_t>(i) * w + (w - 1 - j);
      const std::size_t dst = static_cast<std::size_t>(i) * w + j;
      out.depth.data[dst] = sample.depth.data[src];
      out.depth.valid[dst] = sample.depth.valid[src];
      for (int c = 0; c < sample.guide.channels; ++c) out.guide.at(c, i, j) = sample.guide.at(c, i, w - 1 - j);
    }
  return out;
}

Sample rotate(const Sample& sample, double degrees) {
  Sample out = sample;
  const int h = sample.depth.height, w = sample.depth.width;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double y = i - cy, x = j - cx;
      const int si = static_cast<int>(std::lround(cy + cs * y - sn * x));
      const int sj = static_cast<int>(std::lround(cx + sn * y + cs * x));
      const std::size_t dst = static_cast<std::size_t>(i) * w + j;
      if (si < 0 || si >= h || sj < 0 || sj >= w) {
        out.depth.data[dst] = 0.0;
        out.depth.valid[dst] = 0;
        for (int c = 0; c < sample.guide.channels; ++c) out.guide.at(c, i, j) = 0.0;
        continue;
      }
      const std::size_t src = static_cast<std::size_t>(si) * w + sj;
      out.depth.data[dst] = sample.depth.data[src];
      out.depth.valid[dst] = sample.depth.valid[src];
      for (int c = 0; c < sample.guide.channels; ++c) out.guide.at(c, i, j) = sample.guide.at(c, si, sj);
    }
  return out;
}

Sample augment(const Sample& sample, const AugmentConfig& config, std::mt19937_64& rng) {
  const int h = sample.depth.height, w = sample.depth.width;
  const int size = config.patch_size > 0 ? config.patch_size : std::min(h, w);
  if (size > h || size > w) throw std::invalid_argument("augment: image smaller than patch");
  const int k = std::max(config.scale, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Sample out = sample;
  if (config.rotate) {
    const double angle = (2.0 * unit(rng) - 1.0) * config.max_rotation_deg;
    out = rotate(out, angle);
  }
  std::uniform_int_distribution<int> top_block(0, (h - size) / k), left_block(0, (w - size) / k);
  const int top = top_block(rng) * k;
  const int left = left_block(rng) * k;
  if (size != h || size != w || top != 0 || left != 0) out = crop(out, top, left, size);
  if (config.flip && unit(rng) < 0.5) out = flip_horizontal(out);
  return out;
}

void TrainConfig::validate() const {
  if (scale < 1) throw std::invalid_argument("train: scale must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("train: lambda must be positive");
  if (!(learning_rate > 0.0) || !(lr_decay_factor > 0.0) || lr_decay_every_epochs < 1)
    throw std::invalid_argument("train: learning-rate settings must be positive");
  if (batch_size < 1 || epochs < 1 || !(clip_norm > 0.0)) throw std::invalid_argument("train: bad batch/epoch/clip");
  if (patch_size < 0 || patch_size % scale != 0) throw std::invalid_argument("train: patch size must be divisible by scale");
}

std::string format_record(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "epoch=%d step=%d loss=%.17g grad_norm=%.17g cg_iters=%d lr=%.17g mu=%.17g", r.epoch,
                r.step, r.loss, r.grad_norm, r.cg_iters, r.lr, r.mu);
  return buf;
}

TrainResult train(const TrainConfig& config, const std::vector<Sample>& dataset,
                  const std::function<void(const StepRecord&)>& on_step) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  return train(config, dataset, make_model(config.features, dataset.front().guide.channels, config.seed), on_step);
}

TrainResult train(const TrainConfig& config, const std::vector<Sample>& dataset, Model initial,
                  const std::function<void(const StepRecord&)>& on_step) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  result.model = std::move(initial);
  Model& model = result.model;
  std::vector<double>& params = model.params.values();
  AdamState adam;
  std::mt19937_64 rng(config.seed);
  const AugmentConfig aug{config.patch_size, config.scale, config.flip, config.rotate};

  std::vector<std::size_t> order(dataset.size());
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.learning_rate * std::pow(config.lr_decay_factor, static_cast<double>(epoch / config.lr_decay_every_epochs));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps > 0 && step >= config.max_steps) return result;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<double> grads(params.size(), 0.0);
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step;
      rec.lr = lr;
      for (std::size_t n = start; n < end; ++n) {
        const Sample item = augment(dataset[order[n]], aug, rng);
        const SampleGradient sg = sample_loss_and_gradient(model, item, config.scale, config.lambda, config.loss,
                                                           config.solve);
        for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += sg.grads[p];
        rec.loss += sg.loss;
        rec.cg_iters += sg.cg_iterations;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grads) g *= inv;
      rec.loss *= inv;
      rec.grad_norm = clip_gradients(grads, config.clip_norm);
      if (!std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm))
        throw NumericalError("non-finite loss or gradient at step " + std::to_string(step));
      adam_step(adam, params, grads, lr);
      rec.mu = std::exp(model.params.raw_mu());
      result.log.push_back(rec);
      if (on_step) on_step(rec);
      ++step;
    }
  }
  return result;
}

double evaluate_loss(const Model& model, const std::vector<Sample>& dataset, int k, double lambda, LossKind loss,
                     SolveOptions options) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_loss: empty dataset");
  double total = 0.0;
  for (const Sample& s : dataset) total += sample_loss(model, s, k, lambda, loss, options);
  return total / static_cast<double>(dataset.size());
}

}  // namespace gsr
