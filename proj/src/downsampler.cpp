#include "gsr/downsampler.hpp"

#include <stdexcept>
#include <string>

namespace gsr {

DownsampleOperator build_box_downsampler(int height, int width, int k, const Mask& target_valid) {
  if (k < 1 || height < 1 || width < 1 || height % k != 0 || width % k != 0)
    throw std::invalid_argument("incompatible scale: k=" + std::to_string(k) + " for " + std::to_string(height) +
                                "x" + std::to_string(width));
  if (!target_valid.empty() && target_valid.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("downsampler: mask size does not match image");

  DownsampleOperator d;
  d.scale_ = k;
  d.high_h_ = height;
  d.high_w_ = width;
  const int h = height / k, w = width / k;
  d.row_start_.reserve(static_cast<std::size_t>(h) * w + 1);
  d.col_index_.reserve(static_cast<std::size_t>(height) * width);
  d.weight_.reserve(static_cast<std::size_t>(height) * width);
  d.row_start_.push_back(0);
  for (int bi = 0; bi < h; ++bi)
    for (int bj = 0; bj < w; ++bj) {
      const std::size_t first = d.col_index_.size();
      // Row-major scan keeps column indices strictly increasing.
      for (int i = bi * k; i < (bi + 1) * k; ++i)
        for (int j = bj * k; j < (bj + 1) * k; ++j) {
          const int p = i * width + j;
          if (target_valid.empty() || target_valid[p]) d.col_index_.push_back(p);
        }
      const std::size_t n = d.col_index_.size() - first;
      d.weight_.resize(d.col_index_.size(), n ? 1.0 / static_cast<double>(n) : 0.0);
      d.row_start_.push_back(d.col_index_.size());
    }
  return d;
}

Mask DownsampleOperator::row_mask() const {
  Mask m(rows());
  for (std::size_t r = 0; r < rows(); ++r) m[r] = !row_empty(r);
  return m;
}

std::vector<double> DownsampleOperator::apply(std::span<const double> y) const {
  if (y.size() != cols()) throw std::invalid_argument("downsampler apply: length mismatch");
  std::vector<double> out(rows(), 0.0);
  for (std::size_t r = 0; r < rows(); ++r) {
    double acc = 0.0;
    for (std::size_t n = row_start_[r]; n < row_start_[r + 1]; ++n) acc += weight_[n] * y[col_index_[n]];
    out[r] = acc;
  }
  return out;
}

std::vector<double> DownsampleOperator::apply_transpose(std::span<const double> v) const {
  if (v.size() != rows()) throw std::invalid_argument("downsampler apply_transpose: length mismatch");
  std::vector<double> out(cols(), 0.0);
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t n = row_start_[r]; n < row_start_[r + 1]; ++n) out[col_index_[n]] += weight_[n] * v[r];
  return out;
}

std::vector<double> DownsampleOperator::gram_diagonal() const {
  std::vector<double> diag(cols(), 0.0);
  for (std::size_t n = 0; n < col_index_.size(); ++n) diag[col_index_[n]] += weight_[n] * weight_[n];
  return diag;
}

DownsampleOperator DownsampleOperator::restricted_to(const Mask& source_valid) const {
  if (source_valid.size() != rows()) throw std::invalid_argument("downsampler: source mask size mismatch");
  DownsampleOperator d;
  d.scale_ = scale_;
  d.high_h_ = high_h_;
  d.high_w_ = high_w_;
  d.row_start_.push_back(0);
  for (std::size_t r = 0; r < rows(); ++r) {
    if (source_valid[r])
      for (std::size_t n = row_start_[r]; n < row_start_[r + 1]; ++n) {
        d.col_index_.push_back(col_index_[n]);
        d.weight_.push_back(weight_[n]);
      }
    d.row_start_.push_back(d.col_index_.size());
  }
  return d;
}

SourceImage downsample(const TargetImage& y, int k) {
  const DownsampleOperator d = build_box_downsampler(y.height, y.width, k, y.valid);
  // Invalid pixels never enter a row, so their stored values are irrelevant.
  SourceImage s(y.height / k, y.width / k);
  s.data = d.apply(y.data);
  s.valid = d.row_mask();
  return s;
}

}  // namespace gsr
