#pragma once

#include "gsr/image.hpp"

namespace gsr {

/// Catmull-Rom cubic convolution kernel (a = -0.5).
double cubic_kernel(double x);

/// Bicubic upsampling by an integer factor k. Output pixel (I, J) samples the
/// source at ((I + 0.5) / k - 0.5, (J + 0.5) / k - 0.5) with clamped borders.
/// Invalid source pixels are first filled from their nearest valid pixel
/// (4-connected BFS distance, ties resolved in scan order); the output mask is
/// the nearest-neighbour upsampling of the source mask.
TargetImage bicubic_upsample(const SourceImage& src, int k);

/// Replaces each invalid pixel by its nearest valid one. An image with no
/// valid pixels is returned as zeros.
SourceImage fill_invalid_nearest(const SourceImage& src);

}  // namespace gsr
