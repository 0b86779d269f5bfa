#include "gsr/image.hpp"

#include <algorithm>
#include <cmath>

namespace gsr {

GuideImage::GuideImage(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0) * std::max(c, 0), fill) {}

void GuideImage::validate() const {
  if (height < 1 || width < 1 || channels < 1)
    throw std::invalid_argument("guide: dimensions must be positive");
  if (data.size() != plane_size() * channels)
    throw std::invalid_argument("guide: data size does not match dimensions");
  if (!std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("guide: non-finite value");
}

DepthImage::DepthImage(int h, int w, double fill)
    : height(h), width(w),
      data(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0), fill),
      valid(data.size(), 1) {}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

void DepthImage::validate() const {
  if (height < 1 || width < 1) throw std::invalid_argument("depth: dimensions must be positive");
  if (data.size() != size() || valid.size() != size())
    throw std::invalid_argument("depth: buffer size does not match dimensions");
  for (std::size_t p = 0; p < data.size(); ++p)
    if (valid[p] && !std::isfinite(data[p])) throw std::invalid_argument("depth: non-finite valid value");
}

FeatureMap::FeatureMap(int h, int w, int m, double fill)
    : height(h), width(w), depth(m),
      data(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0) * std::max(m, 0), fill) {}

void FeatureMap::validate() const {
  if (height < 1 || width < 1 || depth < 1)
    throw std::invalid_argument("features: dimensions must be positive");
  if (data.size() != plane_size() * depth)
    throw std::invalid_argument("features: data size does not match dimensions");
  if (!std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("features: non-finite value");
}

Mask upsample_mask(const Mask& mask, int height, int width, int k) {
  Mask out(static_cast<std::size_t>(height) * k * width * k);
  const int out_w = width * k;
  for (int i = 0; i < height * k; ++i)
    for (int j = 0; j < out_w; ++j)
      out[static_cast<std::size_t>(i) * out_w + j] = mask[static_cast<std::size_t>(i / k) * width + j / k];
  return out;
}

}  // namespace gsr
