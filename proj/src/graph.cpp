#include "gsr/graph.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <stdexcept>

namespace gsr {
namespace {

void check_length(const AffinityGraph& g, std::size_t n, const char* op) {
  if (n != g.nodes()) throw std::invalid_argument(std::string(op) + ": length mismatch");
}

// Visits every edge as (edge index, pixel a, pixel b).
template <class F>
void for_each_edge(int h, int w, F&& f) {
  std::size_t e = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j + 1 < w; ++j, ++e) f(e, i * w + j, i * w + j + 1);
  for (int i = 0; i + 1 < h; ++i)
    for (int j = 0; j < w; ++j, ++e) f(e, i * w + j, (i + 1) * w + j);
}

double squared_distance(const FeatureMap& f, int a, int b) {
  const std::size_t plane = f.plane_size();
  double d = 0.0;
  for (int c = 0; c < f.depth; ++c) {
    const double diff = f.data[c * plane + a] - f.data[c * plane + b];
    d += diff * diff;
  }
  return d;
}

}  // namespace

EdgeField::EdgeField(int h, int w, double fill)
    : height(h), width(w),
      right(static_cast<std::size_t>(h) * (w > 0 ? w - 1 : 0), fill),
      down(static_cast<std::size_t>(h > 0 ? h - 1 : 0) * w, fill) {}

std::pair<int, int> EdgeField::endpoints(std::size_t e) const {
  if (e < right.size()) {
    const int i = static_cast<int>(e) / (width - 1), j = static_cast<int>(e) % (width - 1);
    return {i * width + j, i * width + j + 1};
  }
  const int p = static_cast<int>(e - right.size());
  return {p, p + width};
}

AffinityGraph compute_affinities(const FeatureMap& features, AffinityScale scale) {
  features.validate();
  const double mu = scale.mu();
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("affinities: mu must be positive and finite");
  const double denom = features.depth * mu;
  AffinityGraph g{EdgeField(features.height, features.width)};
  for_each_edge(features.height, features.width, [&](std::size_t e, int a, int b) {
    // Floored at the smallest normal double so the graph stays connected.
    g.weights.edge(e) = std::max(std::exp(-squared_distance(features, a, b) / denom),
                                 std::numeric_limits<double>::min());
  });
  return g;
}

std::vector<double> laplacian_apply(const AffinityGraph& graph, std::span<const double> y) {
  check_length(graph, y.size(), "laplacian_apply");
  std::vector<double> out(y.size(), 0.0);
  for_each_edge(graph.height(), graph.width(), [&](std::size_t e, int a, int b) {
    const double flow = graph.weights.edge(e) * (y[a] - y[b]);
    out[a] += flow;
    out[b] -= flow;
  });
  return out;
}

double smoothness_energy(const AffinityGraph& graph, std::span<const double> y) {
  check_length(graph, y.size(), "smoothness_energy");
  double energy = 0.0;
  for_each_edge(graph.height(), graph.width(), [&](std::size_t e, int a, int b) {
    const double d = y[a] - y[b];
    energy += graph.weights.edge(e) * d * d;
  });
  return energy;
}

std::vector<double> degree(const AffinityGraph& graph) {
  std::vector<double> deg(graph.nodes(), 0.0);
  for_each_edge(graph.height(), graph.width(), [&](std::size_t e, int a, int b) {
    deg[a] += graph.weights.edge(e);
    deg[b] += graph.weights.edge(e);
  });
  return deg;
}

AffinityGradients affinity_backward(const FeatureMap& features, AffinityScale scale, const EdgeField& grad_weights) {
  if (grad_weights.height != features.height || grad_weights.width != features.width ||
      grad_weights.edge_count() != EdgeField(features.height, features.width).edge_count())
    throw std::invalid_argument("affinity_backward: shape mismatch");
  const double mu = scale.mu();
  const double denom = features.depth * mu;
  const std::size_t plane = features.plane_size();
  AffinityGradients out{FeatureMap(features.height, features.width, features.depth), 0.0};
  for_each_edge(features.height, features.width, [&](std::size_t e, int a, int b) {
    const double upstream = grad_weights.edge(e);
    if (upstream == 0.0) return;
    const double dist = squared_distance(features, a, b);
    const double weight = std::exp(-dist / denom);
    // d/draw_mu of -dist / (M exp(raw_mu)) is dist / (M mu).
    out.grad_raw_mu += upstream * weight * dist / denom;
    const double coeff = upstream * weight * (-2.0 / denom);
    for (int c = 0; c < features.depth; ++c) {
      const double diff = features.data[c * plane + a] - features.data[c * plane + b];
      out.grad_features.data[c * plane + a] += coeff * diff;
      out.grad_features.data[c * plane + b] -= coeff * diff;
    }
  });
  return out;
}

}  // namespace gsr
