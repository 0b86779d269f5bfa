#include "gsr/backward.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gsr {

LayerGradients backward_solve(const AffinityGraph& graph, const DownsampleOperator& down, double lambda,
                              std::span<const double> y_star, std::span<const double> grad_y, SolveOptions options,
                              bool want_lambda_grad) {
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer required for definiteness");
  const std::size_t n = graph.nodes();
  if (y_star.size() != n || grad_y.size() != n) throw std::invalid_argument("backward_solve: length mismatch");

  const SystemOperator op(graph, down, lambda);
  const int max_iter = options.max_iter > 0 ? options.max_iter : default_max_iter(n);
  const std::vector<double> zero(n, 0.0);
  CgResult adj = cg_solve(op, grad_y, zero, options.rel_tol, max_iter);

  LayerGradients out;
  out.report = adj.report;
  out.adjoint = std::move(adj.x);
  const std::vector<double>& g = out.adjoint;

  // Only the lattice entries of dl/dL = -lambda g y*^T are ever formed.
  const EdgeField& w = graph.weights;
  out.grad_edges = EdgeField(w.height, w.width);
  for (std::size_t e = 0; e < w.edge_count(); ++e) {
    const auto [i, j] = w.endpoints(e);
    const double dl_ii = -lambda * g[i] * y_star[i];
    const double dl_jj = -lambda * g[j] * y_star[j];
    const double dl_ij = -lambda * g[i] * y_star[j];
    const double dl_ji = -lambda * g[j] * y_star[i];
    out.grad_edges.edge(e) = dl_ii + dl_jj - dl_ij - dl_ji;
  }

  out.grad_source = down.apply(g);
  for (std::size_t r = 0; r < down.rows(); ++r)
    if (down.row_empty(r)) out.grad_source[r] = 0.0;

  if (want_lambda_grad) {
    const std::vector<double> ly = laplacian_apply(graph, y_star);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += g[i] * ly[i];
    out.grad_lambda = -acc;
  }
  return out;
}

double GradcheckReport::max_rel_error() const {
  return std::max({max_rel_error_edges, max_rel_error_raw_mu, max_rel_error_source});
}

double gradient_rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradcheckReport layer_gradcheck(std::uint64_t seed, int height, int width, int k, double lambda) {
  if (static_cast<long>(height) * width > 256) throw std::invalid_argument("layer_gradcheck: at most 256 pixels");
  constexpr int kFeatureDepth = 3;
  constexpr double kStep = 1e-4;
  const SolveOptions tight{1e-13, 20 * default_max_iter(static_cast<std::size_t>(height) * width)};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  FeatureMap features(height, width, kFeatureDepth);
  for (double& v : features.data) v = unit(rng);
  const AffinityScale scale{0.3 * unit(rng)};
  const DownsampleOperator down = build_box_downsampler(height, width, k);
  SourceImage source(height / k, width / k);
  for (double& v : source.data) v = unit(rng);

  // l(y) = sum_i c_i y_i + 0.5 sum_i y_i^2
  std::vector<double> coeff(static_cast<std::size_t>(height) * width);
  for (double& c : coeff) c = unit(rng);
  auto loss_of = [&](const AffinityGraph& g, const SourceImage& s) {
    const std::vector<double> y = forward_solve(g, down, s, lambda, nullptr, tight).target.data;
    double l = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) l += coeff[i] * y[i] + 0.5 * y[i] * y[i];
    return l;
  };

  const AffinityGraph graph = compute_affinities(features, scale);
  const ForwardResult fwd = forward_solve(graph, down, source, lambda, nullptr, tight);
  std::vector<double> grad_y(coeff);
  for (std::size_t i = 0; i < grad_y.size(); ++i) grad_y[i] += fwd.target.data[i];
  const LayerGradients grads = backward_solve(graph, down, lambda, fwd.target.data, grad_y, tight);

  // Fourth-order central difference of a scalar function of one offset.
  auto derivative = [&](auto&& f) {
    return (-f(2 * kStep) + 8 * f(kStep) - 8 * f(-kStep) + f(-2 * kStep)) / (12 * kStep);
  };

  GradcheckReport report;
  for (std::size_t e = 0; e < graph.weights.edge_count(); ++e) {
    const double numeric = derivative([&](double h) {
      AffinityGraph g = graph;
      g.weights.edge(e) += h;
      return loss_of(g, source);
    });
    report.max_rel_error_edges =
        std::max(report.max_rel_error_edges, gradient_rel_error(grads.grad_edges.edge(e), numeric));
    ++report.edges_checked;
  }

  {
    const double analytic = affinity_backward(features, scale, grads.grad_edges).grad_raw_mu;
    const double numeric =
        derivative([&](double h) { return loss_of(compute_affinities(features, {scale.raw_mu + h}), source); });
    report.max_rel_error_raw_mu = gradient_rel_error(analytic, numeric);
  }

  for (std::size_t r = 0; r < source.size(); ++r) {
    const double numeric = derivative([&](double h) {
      SourceImage s = source;
      s.data[r] += h;
      return loss_of(graph, s);
    });
    report.max_rel_error_source =
        std::max(report.max_rel_error_source, gradient_rel_error(grads.grad_source[r], numeric));
    ++report.sources_checked;
  }
  return report;
}

}  // namespace gsr
