#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gsr/image.hpp"

namespace gsr {

/// Parameters of a plain stack of 3x3 zero-padded convolutions with ReLU
/// between layers and none after the last. Every trainable value, including
/// the affinity scale raw_mu (stored last), lives in one flat vector so the
/// optimizer can treat it as a single array.
///
/// Layer l maps widths[l] channels to widths[l + 1]; its kernel is laid out
/// [out][in][3][3] followed by its bias [out].
class ConvNetParams {
 public:
  ConvNetParams() = default;
  /// Kaiming-uniform kernels (bound sqrt(6 / fan_in)), zero biases, raw_mu = 0.
  ConvNetParams(std::vector<int> widths, std::uint64_t seed);

  /// C + 1 inputs, hidden widths 32, 32, 32, and 16 output channels.
  static ConvNetParams standard(int guide_channels, std::uint64_t seed);
  /// All-zero parameters for a given architecture.
  static ConvNetParams zeros(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  int input_channels() const { return widths_.front(); }
  int output_channels() const { return widths_.back(); }

  std::span<double> kernel(int layer);
  std::span<const double> kernel(int layer) const;
  std::span<double> bias(int layer);
  std::span<const double> bias(int layer) const;
  double& raw_mu() { return values_.back(); }
  double raw_mu() const { return values_.back(); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Positions of a layer's kernel and bias inside values().
  std::size_t kernel_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer + 1]) * widths_[layer] * 9;
  }

 private:
  void layout();

  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

/// Inputs and pre-activations of every layer, as needed by net_backward.
struct ActivationTape {
  FeatureMap input;
  std::vector<FeatureMap> pre_activations;
};

struct NetOutput {
  FeatureMap features;
  ActivationTape tape;
};

/// Throws NumericalError("divergence") on non-finite activations.
NetOutput net_forward(const ConvNetParams& params, const FeatureMap& input);
/// Runs the net on colour_features(guide, source_up).
NetOutput net_forward(const ConvNetParams& params, const GuideImage& guide, const TargetImage& source_up);

/// Gradient of a scalar with respect to params.values() given dl/dF; the
/// raw_mu slot is left at zero.
std::vector<double> net_backward(const ConvNetParams& params, const ActivationTape& tape, const FeatureMap& grad_features);

// Zero-padded 3x3 cross-correlation and its two adjoints, exposed for tests.
void conv3x3_forward(const FeatureMap& input, std::span<const double> kernel, std::span<const double> bias,
                     FeatureMap& output);
void conv3x3_backward(const FeatureMap& input, std::span<const double> kernel, const FeatureMap& grad_output,
                      std::span<double> grad_kernel, std::span<double> grad_bias, FeatureMap* grad_input);

// Parameter file: "GSRP", u32 version (1), u32 width count, u32 widths...,
// then every value of params.values() as little-endian float32 with raw_mu last.
std::string encode_params(const ConvNetParams& params);
ConvNetParams decode_params(std::string_view bytes);
void save_params(const std::string& path, const ConvNetParams& params);
ConvNetParams load_params(const std::string& path);

}  // namespace gsr
