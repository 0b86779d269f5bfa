#pragma once

#include <span>
#include <vector>

#include "gsr/image.hpp"

namespace gsr {

/// Sparse hw x HW box-averaging operator in compressed-row form. Row r averages
/// the valid high-resolution pixels of the r-th k x k tile with equal weights;
/// a tile without valid pixels gives an empty row.
class DownsampleOperator {
 public:
  DownsampleOperator() = default;

  int scale() const { return scale_; }
  int high_height() const { return high_h_; }
  int high_width() const { return high_w_; }
  int low_height() const { return high_h_ / scale_; }
  int low_width() const { return high_w_ / scale_; }
  std::size_t rows() const { return row_start_.empty() ? 0 : row_start_.size() - 1; }
  std::size_t cols() const { return static_cast<std::size_t>(high_h_) * high_w_; }

  std::span<const int> row_columns(std::size_t r) const {
    return {col_index_.data() + row_start_[r], col_index_.data() + row_start_[r + 1]};
  }
  std::span<const double> row_weights(std::size_t r) const {
    return {weight_.data() + row_start_[r], weight_.data() + row_start_[r + 1]};
  }
  bool row_empty(std::size_t r) const { return row_start_[r] == row_start_[r + 1]; }

  /// Source validity implied by the operator: true where the row is non-empty.
  Mask row_mask() const;

  std::vector<double> apply(std::span<const double> y) const;
  std::vector<double> apply_transpose(std::span<const double> v) const;
  /// Diagonal of D^T D.
  std::vector<double> gram_diagonal() const;

  /// Copy of this operator with rows cleared wherever `source_valid` is 0.
  DownsampleOperator restricted_to(const Mask& source_valid) const;

  friend DownsampleOperator build_box_downsampler(int height, int width, int k, const Mask& target_valid);

 private:
  int scale_ = 1;
  int high_h_ = 0;
  int high_w_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<int> col_index_;
  std::vector<double> weight_;
};

/// Throws std::invalid_argument("incompatible scale") unless k >= 1 divides
/// both dimensions. An empty `target_valid` means every pixel is valid.
DownsampleOperator build_box_downsampler(int height, int width, int k, const Mask& target_valid = {});

/// Synthesizes a source from a high-resolution depth map: s = D y with D built
/// from y's mask. Source pixels whose tile has no valid pixel are invalid.
SourceImage downsample(const TargetImage& y, int k);

}  // namespace gsr
