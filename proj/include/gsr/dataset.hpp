#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsr/image.hpp"

namespace gsr {

/// A guide and its ground-truth depth; sources are synthesized on demand.
struct Sample {
  std::string id;
  GuideImage guide;
  TargetImage depth;
};

/// Reads `{root}/{split}/{id}.guide.ppm` + `{id}.depth.pfm` (or `.depth.pgm`)
/// and the optional `{id}.mask.pgm`, sorted by id. Depth values are multiplied
/// by `depth_scale`.
std::vector<Sample> load_split(const std::string& root, const std::string& split, double depth_scale = 1.0);

/// Writes a sample in the layout read by load_split (guide as PPM, depth as PFM, mask as PGM).
void save_sample(const std::string& dir, const Sample& sample);

/// Piecewise-constant depth maps made of a few axis-aligned rectangles over a
/// background, with an RGB guide whose colours mostly follow the depth regions.
/// Some depth edges have almost no colour contrast and some colour edges have
/// no depth edge, so raw colour is an imperfect cue.
std::vector<Sample> make_synthetic_set(int count, int size, std::uint64_t seed);

}  // namespace gsr
