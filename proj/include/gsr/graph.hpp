#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "gsr/image.hpp"

namespace gsr {

/// One value per undirected 4-neighbour edge of an H x W lattice.
/// right[i * (W - 1) + j] is edge (i, j)-(i, j + 1); down[i * W + j] is edge
/// (i, j)-(i + 1, j).
struct EdgeField {
  int height = 0;
  int width = 0;
  std::vector<double> right;
  std::vector<double> down;

  EdgeField() = default;
  EdgeField(int h, int w, double fill = 0.0);

  std::size_t edge_count() const { return right.size() + down.size(); }
  /// Edge e in [0, edge_count()): right edges first, then down edges.
  double& edge(std::size_t e) { return e < right.size() ? right[e] : down[e - right.size()]; }
  double edge(std::size_t e) const { return e < right.size() ? right[e] : down[e - right.size()]; }
  /// Pixel indices (i*W + j) of the two endpoints of edge e.
  std::pair<int, int> endpoints(std::size_t e) const;
};

/// Edge weights A_e of the lattice graph; the Laplacian L = U - A is implicit.
struct AffinityGraph {
  EdgeField weights;

  int height() const { return weights.height; }
  int width() const { return weights.width; }
  std::size_t nodes() const { return static_cast<std::size_t>(weights.height) * weights.width; }
};

/// mu = exp(raw_mu), so the scale stays positive under unconstrained updates.
struct AffinityScale {
  double raw_mu = 0.0;
  double mu() const { return std::exp(raw_mu); }
};

/// A_ij = exp(-|F_i - F_j|^2 / (M mu)) on every lattice edge.
AffinityGraph compute_affinities(const FeatureMap& features, AffinityScale scale);

/// (L y)_i = sum over neighbours j of A_ij (y_i - y_j).
std::vector<double> laplacian_apply(const AffinityGraph& graph, std::span<const double> y);

/// sum over edges of A_e (y_i - y_j)^2, which equals y^T L y.
double smoothness_energy(const AffinityGraph& graph, std::span<const double> y);

/// Weighted degree U_ii, i.e. the total affinity of each pixel to its neighbours.
std::vector<double> degree(const AffinityGraph& graph);

struct AffinityGradients {
  FeatureMap grad_features;
  double grad_raw_mu = 0.0;
};

/// Pulls per-edge gradients dl/dA_e back onto the features and raw_mu.
AffinityGradients affinity_backward(const FeatureMap& features, AffinityScale scale, const EdgeField& grad_weights);

}  // namespace gsr
