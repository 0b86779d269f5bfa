#pragma once

#include "gsr/image.hpp"

namespace gsr {

inline constexpr double kVarianceGuard = 1e-8;

/// Guide channels followed by the upsampled source, unnormalized.
FeatureMap stack_inputs(const GuideImage& guide, const TargetImage& source_up);

/// Per-channel zero mean / unit variance over the whole patch. Channels whose
/// variance is below kVarianceGuard become all zeros.
FeatureMap standardize_channels(FeatureMap features);

/// Raw colour baseline: standardize_channels(stack_inputs(guide, source_up)),
/// so M = C + 1.
FeatureMap colour_features(const GuideImage& guide, const TargetImage& source_up);

}  // namespace gsr
