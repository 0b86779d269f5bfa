#pragma once

#include <span>
#include <vector>

#include "gsr/downsampler.hpp"
#include "gsr/graph.hpp"
#include "gsr/image.hpp"

namespace gsr {

/// v -> lambda L v + D^T D v. Holds references: the graph and the operator must
/// outlive it.
class SystemOperator {
 public:
  SystemOperator(const AffinityGraph& graph, const DownsampleOperator& down, double lambda);

  std::size_t size() const { return graph_.nodes(); }
  double lambda() const { return lambda_; }
  const AffinityGraph& graph() const { return graph_; }
  const DownsampleOperator& down() const { return down_; }

  std::vector<double> apply(std::span<const double> v) const;
  /// lambda * degree_i + (D^T D)_ii, assembled without a matvec.
  std::vector<double> diagonal() const;

 private:
  const AffinityGraph& graph_;
  const DownsampleOperator& down_;
  double lambda_;
};

struct CgReport {
  int iterations = 0;
  double final_residual_norm = 0.0;
  double tolerance = 0.0;  // absolute: rel_tol * |rhs|
  bool converged = false;
};

struct CgResult {
  std::vector<double> x;
  CgReport report;
};

/// Jacobi-preconditioned conjugate gradients. Stops once the true residual
/// |op(x) - rhs| is at most rel_tol * |rhs|; otherwise returns the last iterate
/// with converged = false. A zero rhs returns the exact solution 0. Throws
/// NumericalError("numerical breakdown") on non-finite values.
CgResult cg_solve(const SystemOperator& op, std::span<const double> rhs, std::span<const double> x0, double rel_tol,
                  int max_iter);

/// 10 * sqrt(n), at least 1.
int default_max_iter(std::size_t n);

struct SolveOptions {
  double rel_tol = 1e-7;
  int max_iter = 0;  // 0 selects default_max_iter(HW)
};

struct ForwardResult {
  TargetImage target;
  CgReport report;
};

/// Solves (lambda L + D^T D) y = D^T s. Rows of D must be empty wherever s is
/// invalid (see DownsampleOperator::restricted_to). The warm start defaults to
/// bicubic_upsample(s, k). The output mask marks pixels whose tile has a valid
/// source pixel. Throws std::invalid_argument("regularizer required for
/// definiteness") when lambda <= 0.
ForwardResult forward_solve(const AffinityGraph& graph, const DownsampleOperator& down, const SourceImage& source,
                            double lambda, const TargetImage* warm_start = nullptr, SolveOptions options = {});

/// Right-hand side D^T s with invalid source pixels contributing zero.
std::vector<double> source_rhs(const DownsampleOperator& down, const SourceImage& source);

/// Row-major dense n x n matrix, used only for small-instance checks.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<std::size_t> first_nonzero;  // per row, filled by cholesky_factor

  explicit DenseMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

inline constexpr std::size_t kDenseOracleLimit = 4096;

/// Materializes lambda L + D^T D. Throws std::length_error above kDenseOracleLimit nodes.
DenseMatrix assemble_dense_system(const AffinityGraph& graph, const DownsampleOperator& down, double lambda);

/// In-place Cholesky of an SPD matrix (lower factor), exploiting the row
/// profile. Throws NumericalError if a pivot is not positive.
void cholesky_factor(DenseMatrix& a);
std::vector<double> cholesky_solve(const DenseMatrix& factor, std::span<const double> rhs);

/// Direct solve of the forward system, for tests and validation only.
std::vector<double> dense_oracle_solve(const AffinityGraph& graph, const DownsampleOperator& down,
                                       const SourceImage& source, double lambda);

}  // namespace gsr
