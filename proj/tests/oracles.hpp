#pragma once

// Reference implementations for tests. They follow the textbook definitions
// directly and share no code paths with the library beyond the data types.

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsr/graph.hpp"
#include "gsr/image.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, std::vector<double>(cols, 0.0)); }

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t = zeros(a.empty() ? 0 : a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      if (a[i][k] != 0.0)
        for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    if (a[col][col] == 0.0) throw std::runtime_error("singular");
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Dense hw x HW box-averaging matrix, all pixels valid.
inline Matrix box_matrix(int height, int width, int k) {
  const int h = height / k, w = width / k;
  Matrix d = zeros(static_cast<std::size_t>(h) * w, static_cast<std::size_t>(height) * width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) d[(i / k) * w + j / k][i * width + j] = 1.0 / (k * k);
  return d;
}

/// Dense symmetric affinity matrix from lattice edge lists.
inline Matrix affinity_matrix(const gsr::AffinityGraph& g) {
  const int h = g.height(), w = g.width();
  Matrix a = zeros(g.nodes(), g.nodes());
  for (int i = 0; i < h; ++i)
    for (int j = 0; j + 1 < w; ++j) {
      const double v = g.weights.right[i * (w - 1) + j];
      a[i * w + j][i * w + j + 1] = a[i * w + j + 1][i * w + j] = v;
    }
  for (int i = 0; i + 1 < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double v = g.weights.down[i * w + j];
      a[i * w + j][(i + 1) * w + j] = a[(i + 1) * w + j][i * w + j] = v;
    }
  return a;
}

/// U - A.
inline Matrix laplacian_matrix(const gsr::AffinityGraph& g) {
  Matrix l = affinity_matrix(g);
  for (std::size_t i = 0; i < l.size(); ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < l.size(); ++j) deg += l[i][j];
    for (std::size_t j = 0; j < l.size(); ++j) l[i][j] = -l[i][j];
    l[i][i] += deg;
  }
  return l;
}

/// lambda L + D^T D assembled from dense pieces.
inline Matrix system_matrix(const gsr::AffinityGraph& g, const Matrix& d, double lambda) {
  Matrix a = matmul(transpose(d), d);
  const Matrix l = laplacian_matrix(g);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) a[i][j] += lambda * l[i][j];
  return a;
}

/// exp(-|F_a - F_b|^2 / (M mu)) for one pair of pixels.
inline double edge_affinity(const gsr::FeatureMap& f, int ia, int ja, int ib, int jb, double mu) {
  double d = 0.0;
  for (int c = 0; c < f.depth; ++c) {
    const double diff = f.at(c, ia, ja) - f.at(c, ib, jb);
    d += diff * diff;
  }
  return std::exp(-d / (f.depth * mu));
}

/// Keys cubic convolution, a = -0.5, written as the piecewise polynomial.
inline double keys(double x) {
  x = std::abs(x);
  if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

/// Bicubic sample of a fully valid image at real coordinates, by direct
/// summation over the 4x4 neighbourhood with clamped indices.
inline double bicubic_at(const gsr::DepthImage& img, double y, double x) {
  const int iy = static_cast<int>(std::floor(y)), ix = static_cast<int>(std::floor(x));
  double acc = 0.0;
  for (int a = iy - 1; a <= iy + 2; ++a)
    for (int b = ix - 1; b <= ix + 2; ++b) {
      const int ca = std::min(std::max(a, 0), img.height - 1);
      const int cb = std::min(std::max(b, 0), img.width - 1);
      acc += keys(y - a) * keys(x - b) * img.at(ca, cb);
    }
  return acc;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num) / norm(b);
}

inline gsr::AffinityGraph random_graph(int h, int w, std::mt19937_64& rng, double lo = 0.05, double hi = 1.0) {
  gsr::AffinityGraph g{gsr::EdgeField(h, w)};
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : g.weights.right) v = dist(rng);
  for (double& v : g.weights.down) v = dist(rng);
  return g;
}

}  // namespace oracle
