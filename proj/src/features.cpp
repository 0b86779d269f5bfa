#include "gsr/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsr {

FeatureMap stack_inputs(const GuideImage& guide, const TargetImage& source_up) {
  guide.validate();
  if (guide.height != source_up.height || guide.width != source_up.width)
    throw std::invalid_argument("features: guide and source sizes differ");
  FeatureMap f(guide.height, guide.width, guide.channels + 1);
  std::copy(guide.data.begin(), guide.data.end(), f.data.begin());
  std::copy(source_up.data.begin(), source_up.data.end(), f.data.begin() + guide.data.size());
  return f;
}

FeatureMap standardize_channels(FeatureMap features) {
  const std::size_t plane = features.plane_size();
  for (int c = 0; c < features.depth; ++c) {
    double* x = features.data.data() + c * plane;
    double mean = 0.0;
    for (std::size_t p = 0; p < plane; ++p) mean += x[p];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t p = 0; p < plane; ++p) var += (x[p] - mean) * (x[p] - mean);
    var /= static_cast<double>(plane);
    const double inv_std = var < kVarianceGuard ? 0.0 : 1.0 / std::sqrt(var);
    for (std::size_t p = 0; p < plane; ++p) x[p] = (x[p] - mean) * inv_std;
  }
  return features;
}

FeatureMap colour_features(const GuideImage& guide, const TargetImage& source_up) {
  return standardize_channels(stack_inputs(guide, source_up));
}

}  // namespace gsr
