#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gsr/downsampler.hpp"
#include "gsr/graph.hpp"
#include "gsr/solver.hpp"

namespace gsr {

struct LayerGradients {
  EdgeField grad_edges;              // dl/dA_e, aligned with AffinityGraph::weights
  std::vector<double> grad_source;   // dl/ds = D g, one entry per source pixel
  std::vector<double> adjoint;       // g = dl/d(D^T s)
  std::optional<double> grad_lambda; // -<g, L y*>, when requested
  CgReport report;
};

/// Gradients of a loss l(y*) through y* = (lambda L + D^T D)^-1 D^T s.
/// Solves the adjoint system (lambda L + D^T D) g = dl/dy*, then restricts
/// dl/dL = -lambda g y*^T to the lattice pattern and folds each edge's four
/// Laplacian entries (ii, jj, ij, ji) into dl/dA_e.
LayerGradients backward_solve(const AffinityGraph& graph, const DownsampleOperator& down, double lambda,
                              std::span<const double> y_star, std::span<const double> grad_y,
                              SolveOptions options = {}, bool want_lambda_grad = false);

struct GradcheckReport {
  double max_rel_error_edges = 0.0;
  double max_rel_error_raw_mu = 0.0;
  double max_rel_error_source = 0.0;
  std::size_t edges_checked = 0;
  std::size_t sources_checked = 0;

  double max_rel_error() const;
  bool passed(double bound = 1e-5) const { return max_rel_error() <= bound; }
};

/// |a - b| / max(|a|, |b|, floor). The floor keeps gradients that are zero up
/// to solver tolerance from dominating the report.
double gradient_rel_error(double analytic, double numeric, double floor = 1e-7);

/// Builds a random H x W instance (features, raw_mu, source) and compares the
/// analytic layer gradients of a fixed quadratic loss against central finite
/// differences for every edge weight, raw_mu and every source pixel.
GradcheckReport layer_gradcheck(std::uint64_t seed, int height, int width, int k, double lambda);

}  // namespace gsr
