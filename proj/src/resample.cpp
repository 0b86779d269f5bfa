#include "gsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace gsr {

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

SourceImage fill_invalid_nearest(const SourceImage& src) {
  SourceImage out = src;
  const int h = src.height, w = src.width;
  std::vector<int> origin(src.size(), -1);
  std::queue<int> frontier;
  for (int p = 0; p < static_cast<int>(src.size()); ++p)
    if (src.valid[p]) {
      origin[p] = p;
      frontier.push(p);
    }
  if (frontier.empty()) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    return out;
  }
  constexpr int di[4] = {-1, 0, 0, 1};
  constexpr int dj[4] = {0, -1, 1, 0};
  while (!frontier.empty()) {
    const int p = frontier.front();
    frontier.pop();
    const int i = p / w, j = p % w;
    for (int n = 0; n < 4; ++n) {
      const int ni = i + di[n], nj = j + dj[n];
      if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
      const int q = ni * w + nj;
      if (origin[q] >= 0) continue;
      origin[q] = origin[p];
      frontier.push(q);
    }
  }
  for (std::size_t p = 0; p < src.size(); ++p) out.data[p] = src.data[origin[p]];
  return out;
}

TargetImage bicubic_upsample(const SourceImage& src, int k) {
  if (k < 1) throw std::invalid_argument("bicubic_upsample: scale must be >= 1");
  src.validate();
  const SourceImage filled = fill_invalid_nearest(src);
  const int h = src.height, w = src.width;
  TargetImage out(h * k, w * k);
  out.valid = upsample_mask(src.valid, h, w, k);

  // Separable: per output coordinate, 4 taps with clamped indices.
  struct Taps {
    int index[4];
    double weight[4];
  };
  auto taps_for = [k](int out_coord, int extent) {
    Taps t{};
    const double x = (out_coord + 0.5) / k - 0.5;
    const double base = std::floor(x);
    for (int n = 0; n < 4; ++n) {
      const double pos = base - 1 + n;
      t.index[n] = std::clamp(static_cast<int>(pos), 0, extent - 1);
      t.weight[n] = cubic_kernel(x - pos);
    }
    return t;
  };
  std::vector<Taps> row_taps(h * k), col_taps(w * k);
  for (int i = 0; i < h * k; ++i) row_taps[i] = taps_for(i, h);
  for (int j = 0; j < w * k; ++j) col_taps[j] = taps_for(j, w);

  // Columns first into an h x (w k) buffer, then rows.
  std::vector<double> tmp(static_cast<std::size_t>(h) * w * k);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w * k; ++j) {
      const Taps& t = col_taps[j];
      double acc = 0.0;
      for (int n = 0; n < 4; ++n) acc += t.weight[n] * filled.at(i, t.index[n]);
      tmp[static_cast<std::size_t>(i) * w * k + j] = acc;
    }
  for (int i = 0; i < h * k; ++i) {
    const Taps& t = row_taps[i];
    for (int j = 0; j < w * k; ++j) {
      double acc = 0.0;
      for (int n = 0; n < 4; ++n) acc += t.weight[n] * tmp[static_cast<std::size_t>(t.index[n]) * w * k + j];
      out.at(i, j) = acc;
    }
  }
  return out;
}

}  // namespace gsr
