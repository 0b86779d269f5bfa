#pragma once

#include "gsr/image.hpp"

namespace gsr {

// Errors over pixels valid in both images. Throw std::domain_error("no valid
// pixels") when the masks do not intersect and std::invalid_argument on a
// size mismatch.
double masked_mse(const TargetImage& pred, const TargetImage& gt);
double masked_mae(const TargetImage& pred, const TargetImage& gt);

}  // namespace gsr
