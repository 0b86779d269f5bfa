#include "gsr/solver.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gsr/resample.hpp"

namespace gsr {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_finite(double v) {
  if (!std::isfinite(v)) throw NumericalError("numerical breakdown");
}

void check_forward_inputs(const AffinityGraph& graph, const DownsampleOperator& down, const SourceImage& source) {
  if (down.high_height() != graph.height() || down.high_width() != graph.width())
    throw std::invalid_argument("forward_solve: graph and downsampler sizes differ");
  if (source.height != down.low_height() || source.width != down.low_width())
    throw std::invalid_argument("forward_solve: source size does not match the downsampler");
  source.validate();
  for (std::size_t r = 0; r < down.rows(); ++r)
    if (!source.valid[r] && !down.row_empty(r))
      throw std::invalid_argument("forward_solve: invalid source pixel has a non-empty downsampler row");
}

}  // namespace

SystemOperator::SystemOperator(const AffinityGraph& graph, const DownsampleOperator& down, double lambda)
    : graph_(graph), down_(down), lambda_(lambda) {
  if (down.cols() != graph.nodes()) throw std::invalid_argument("SystemOperator: size mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("SystemOperator: lambda must be >= 0");
}

std::vector<double> SystemOperator::apply(std::span<const double> v) const {
  std::vector<double> out = down_.apply_transpose(down_.apply(v));
  if (lambda_ != 0.0) {
    const std::vector<double> lv = laplacian_apply(graph_, v);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += lambda_ * lv[n];
  }
  return out;
}

std::vector<double> SystemOperator::diagonal() const {
  std::vector<double> diag = down_.gram_diagonal();
  const std::vector<double> deg = degree(graph_);
  for (std::size_t n = 0; n < diag.size(); ++n) diag[n] += lambda_ * deg[n];
  return diag;
}

int default_max_iter(std::size_t n) {
  return std::max(1, static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(n)))));
}

CgResult cg_solve(const SystemOperator& op, std::span<const double> rhs, std::span<const double> x0, double rel_tol,
                  int max_iter) {
  const std::size_t n = op.size();
  if (rhs.size() != n || x0.size() != n) throw std::invalid_argument("cg_solve: length mismatch");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("cg_solve: rel_tol must be positive");

  CgResult result;
  const double rhs_norm = norm(rhs);
  check_finite(rhs_norm);
  if (rhs_norm == 0.0) {
    result.x.assign(n, 0.0);
    result.report.converged = true;
    return result;
  }
  const double tol = rel_tol * rhs_norm;
  result.report.tolerance = tol;

  std::vector<double> inv_diag = op.diagonal();
  for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;

  std::vector<double>& x = result.x;
  x.assign(x0.begin(), x0.end());
  std::vector<double> r(n), z(n), p(n);

  auto reset_residual = [&] {
    const std::vector<double> ax = op.apply(x);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ax[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    return dot(r, z);
  };

  double rz = reset_residual();
  double r_norm = norm(r);
  check_finite(r_norm);
  int it = 0;
  for (;;) {
    if (r_norm <= tol) {
      // The recurrence drifts from the true residual; only stop on the latter.
      rz = reset_residual();
      r_norm = norm(r);
      if (r_norm <= tol) break;
    }
    if (it >= max_iter) break;
    const std::vector<double> ap = op.apply(p);
    const double pap = dot(p, ap);
    check_finite(pap);
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = inv_diag[i] * r[i];
    }
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_next;
    r_norm = norm(r);
    check_finite(r_norm);
    ++it;
  }

  const std::vector<double> ax = op.apply(x);
  double res2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) res2 += (rhs[i] - ax[i]) * (rhs[i] - ax[i]);
  result.report.iterations = it;
  result.report.final_residual_norm = std::sqrt(res2);
  check_finite(result.report.final_residual_norm);
  result.report.converged = result.report.final_residual_norm <= tol;
  return result;
}

std::vector<double> source_rhs(const DownsampleOperator& down, const SourceImage& source) {
  std::vector<double> s(source.size(), 0.0);
  for (std::size_t r = 0; r < s.size(); ++r)
    if (source.valid[r]) s[r] = source.data[r];
  return down.apply_transpose(s);
}

ForwardResult forward_solve(const AffinityGraph& graph, const DownsampleOperator& down, const SourceImage& source,
                            double lambda, const TargetImage* warm_start, SolveOptions options) {
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer required for definiteness");
  check_forward_inputs(graph, down, source);

  const SystemOperator op(graph, down, lambda);
  const std::vector<double> rhs = source_rhs(down, source);
  const int max_iter = options.max_iter > 0 ? options.max_iter : default_max_iter(op.size());

  CgResult cg;
  if (warm_start) {
    if (warm_start->height != graph.height() || warm_start->width != graph.width())
      throw std::invalid_argument("forward_solve: warm start size mismatch");
    cg = cg_solve(op, rhs, warm_start->data, options.rel_tol, max_iter);
  } else {
    const TargetImage init = bicubic_upsample(source, down.scale());
    cg = cg_solve(op, rhs, init.data, options.rel_tol, max_iter);
  }

  ForwardResult out;
  out.target.height = graph.height();
  out.target.width = graph.width();
  out.target.data = std::move(cg.x);
  Mask covered = down.row_mask();
  for (std::size_t r = 0; r < covered.size(); ++r) covered[r] = covered[r] && source.valid[r];
  out.target.valid = upsample_mask(covered, down.low_height(), down.low_width(), down.scale());
  out.report = cg.report;
  return out;
}

DenseMatrix assemble_dense_system(const AffinityGraph& graph, const DownsampleOperator& down, double lambda) {
  const std::size_t n = graph.nodes();
  if (n > kDenseOracleLimit) throw std::length_error("dense oracle limited to 4096 pixels");
  if (down.cols() != n) throw std::invalid_argument("assemble_dense_system: size mismatch");
  DenseMatrix a(n);
  const EdgeField& w = graph.weights;
  for (std::size_t e = 0; e < w.edge_count(); ++e) {
    const auto [i, j] = w.endpoints(e);
    const double v = lambda * w.edge(e);
    a(i, i) += v;
    a(j, j) += v;
    a(i, j) -= v;
    a(j, i) -= v;
  }
  for (std::size_t r = 0; r < down.rows(); ++r) {
    const auto cols = down.row_columns(r);
    const auto wts = down.row_weights(r);
    for (std::size_t p = 0; p < cols.size(); ++p)
      for (std::size_t q = 0; q < cols.size(); ++q) a(cols[p], cols[q]) += wts[p] * wts[q];
  }
  return a;
}

void cholesky_factor(DenseMatrix& a) {
  const std::size_t n = a.n;
  a.first_nonzero.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = 0;
    while (f < i && a(i, f) == 0.0) ++f;
    a.first_nonzero[i] = f;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t fi = a.first_nonzero[i];
    for (std::size_t j = fi; j <= i; ++j) {
      const std::size_t start = std::max(fi, a.first_nonzero[j]);
      double sum = a(i, j);
      const double* ri = &a.values[i * n];
      const double* rj = &a.values[j * n];
      for (std::size_t k = start; k < j; ++k) sum -= ri[k] * rj[k];
      if (j == i) {
        if (!(sum > 0.0)) throw NumericalError("cholesky: matrix is not positive definite");
        a(i, i) = std::sqrt(sum);
      } else {
        a(i, j) = sum / a(j, j);
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
  }
}

std::vector<double> cholesky_solve(const DenseMatrix& factor, std::span<const double> rhs) {
  const std::size_t n = factor.n;
  if (rhs.size() != n || factor.first_nonzero.size() != n) throw std::invalid_argument("cholesky_solve: bad input");
  std::vector<double> y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = y[i];
    for (std::size_t k = factor.first_nonzero[i]; k < i; ++k) sum -= factor(i, k) * y[k];
    y[i] = sum / factor(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    y[ii] /= factor(ii, ii);
    for (std::size_t k = factor.first_nonzero[ii]; k < ii; ++k) y[k] -= factor(ii, k) * y[ii];
  }
  return y;
}

std::vector<double> dense_oracle_solve(const AffinityGraph& graph, const DownsampleOperator& down,
                                       const SourceImage& source, double lambda) {
  check_forward_inputs(graph, down, source);
  DenseMatrix a = assemble_dense_system(graph, down, lambda);
  cholesky_factor(a);
  return cholesky_solve(a, source_rhs(down, source));
}

}  // namespace gsr
