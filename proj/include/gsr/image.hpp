#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsr {

// All multi-channel buffers are row-major planar: element (c, i, j) lives at
// c * H * W + i * W + j. Single-channel buffers are plain row-major.

using Mask = std::vector<std::uint8_t>;

/// Raised when an iterative or numeric stage produces non-finite values or
/// loses definiteness.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GuideImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  GuideImage() = default;
  GuideImage(int h, int w, int c, double fill = 0.0);

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int i, int j) { return data[c * plane_size() + static_cast<std::size_t>(i) * width + j]; }
  double at(int c, int i, int j) const { return data[c * plane_size() + static_cast<std::size_t>(i) * width + j]; }

  /// Throws std::invalid_argument when dimensions or values are inconsistent.
  void validate() const;
};

/// Depth map with a per-pixel validity mask. Values are in whatever unit the
/// file stored (centimetres by convention); metrics are reported in that unit.
struct DepthImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;
  Mask valid;

  DepthImage() = default;
  DepthImage(int h, int w, double fill = 0.0);

  std::size_t size() const { return static_cast<std::size_t>(height) * width; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }
  bool is_valid(int i, int j) const { return valid[static_cast<std::size_t>(i) * width + j] != 0; }
  std::size_t valid_count() const;

  void validate() const;
};

using SourceImage = DepthImage;
using TargetImage = DepthImage;

struct FeatureMap {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int m, double fill = 0.0);

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int i, int j) { return data[c * plane_size() + static_cast<std::size_t>(i) * width + j]; }
  double at(int c, int i, int j) const { return data[c * plane_size() + static_cast<std::size_t>(i) * width + j]; }

  void validate() const;
};

/// Nearest-neighbour upsampling of a mask by an integer factor.
Mask upsample_mask(const Mask& mask, int height, int width, int k);

}  // namespace gsr
