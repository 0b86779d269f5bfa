#include "gsr/dataset.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "gsr/netpbm.hpp"

namespace gsr {

namespace fs = std::filesystem;

std::vector<Sample> load_split(const std::string& root, const std::string& split, double depth_scale) {
  const fs::path dir = fs::path(root) / split;
  if (!fs::is_directory(dir)) throw IoError(IoError::Kind::open_failed, "no such split directory '" + dir.string() + "'");
  const std::string suffix = ".guide.ppm";
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());

  std::vector<Sample> out;
  for (const std::string& id : ids) {
    Sample s;
    s.id = id;
    s.guide = load_guide((dir / (id + ".guide.ppm")).string());
    const fs::path pfm = dir / (id + ".depth.pfm"), pgm = dir / (id + ".depth.pgm");
    s.depth = load_depth((fs::exists(pfm) ? pfm : pgm).string());
    if (s.depth.height != s.guide.height || s.depth.width != s.guide.width)
      throw IoError(IoError::Kind::malformed_header, "sample '" + id + "': guide and depth sizes differ");
    const fs::path mask = dir / (id + ".mask.pgm");
    if (fs::exists(mask)) {
      const Mask m = load_mask(mask.string(), s.depth.height, s.depth.width);
      for (std::size_t p = 0; p < m.size(); ++p) s.depth.valid[p] = s.depth.valid[p] && m[p];
    }
    for (double& v : s.depth.data) v *= depth_scale;
    out.push_back(std::move(s));
  }
  return out;
}

void save_sample(const std::string& dir, const Sample& sample) {
  fs::create_directories(dir);
  const fs::path base = fs::path(dir);
  save_guide((base / (sample.id + ".guide.ppm")).string(), sample.guide);
  save_depth((base / (sample.id + ".depth.pfm")).string(), sample.depth);
  if (sample.depth.valid_count() != sample.depth.size())
    save_mask((base / (sample.id + ".mask.pgm")).string(), sample.depth.valid, sample.depth.height, sample.depth.width);
}

std::vector<Sample> make_synthetic_set(int count, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coord(0, size - 1);
  std::normal_distribution<double> noise(0.0, 0.02);

  auto random_rect = [&] {
    int i0 = coord(rng), i1 = coord(rng), j0 = coord(rng), j1 = coord(rng);
    if (i0 > i1) std::swap(i0, i1);
    if (j0 > j1) std::swap(j0, j1);
    return std::array<int, 4>{i0, std::min(std::max(i1, i0 + size / 8), size - 1), j0,
                              std::min(std::max(j1, j0 + size / 8), size - 1)};
  };

  std::vector<Sample> out;
  for (int n = 0; n < count; ++n) {
    Sample s;
    s.id = "synth" + std::to_string(n);
    s.depth = TargetImage(size, size);
    s.guide = GuideImage(size, size, 3);

    std::vector<int> label(static_cast<std::size_t>(size) * size, 0);
    const int rects = 3 + static_cast<int>(unit(rng) * 3);
    std::vector<double> depth_of{100.0 + 100.0 * unit(rng)};
    for (int r = 1; r <= rects; ++r) {
      const auto [i0, i1, j0, j1] = random_rect();
      depth_of.push_back(100.0 + 300.0 * unit(rng));
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) label[static_cast<std::size_t>(i) * size + j] = r;
    }

    // Half of the depth regions barely differ in colour from the background,
    // and two colour-only rectangles add guide edges with no depth edge.
    std::vector<std::array<double, 3>> colour_of(depth_of.size());
    for (auto& c : colour_of)
      for (double& v : c) v = unit(rng);
    for (std::size_t r = 1; r < colour_of.size(); ++r)
      if (unit(rng) < 0.5)
        for (int c = 0; c < 3; ++c) colour_of[r][c] = std::clamp(colour_of[0][c] + 0.05 * (unit(rng) - 0.5), 0.0, 1.0);
    std::vector<std::array<double, 3>> shift(static_cast<std::size_t>(size) * size, {0.0, 0.0, 0.0});
    for (int t = 0; t < 2; ++t) {
      const auto [i0, i1, j0, j1] = random_rect();
      const std::array<double, 3> d{unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5};
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) shift[static_cast<std::size_t>(i) * size + j] = d;
    }

    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        const std::size_t p = static_cast<std::size_t>(i) * size + j;
        const int l = label[p];
        s.depth.at(i, j) = depth_of[l];
        for (int c = 0; c < 3; ++c)
          s.guide.at(c, i, j) = std::clamp(colour_of[l][c] + shift[p][c] + noise(rng), 0.0, 1.0);
      }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gsr
