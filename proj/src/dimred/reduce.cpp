#include <algorithm>
#include <cmath>

#include "stacksense/dimred.hpp"
#include "stacksense/error.hpp"

namespace stacksense::dimred {

NormalizationStats normalize_fit(const Matrix& data) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n == 0 || d == 0) throw InvalidArgument("normalize_fit: empty data");
  if (n < 2) throw InvalidArgument("normalize_fit: need at least two rows");
  NormalizationStats s;
  s.means.assign(d, 0.0);
  s.stds.assign(d, 0.0);
  s.constant.assign(d, false);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) s.means[c] += data(r, c);
  for (double& m : s.means) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = data(r, c) - s.means[c];
      s.stds[c] += dev * dev;
    }
  for (std::size_t c = 0; c < d; ++c) {
    s.stds[c] = std::sqrt(s.stds[c] / static_cast<double>(n));
    // Relative test as well, so large constant numerics (e.g. W=FFFF in every
    // row) do not survive on round-off.
    s.constant[c] = s.stds[c] < kConstantStd || s.stds[c] < 1e-12 * std::abs(s.means[c]);
  }
  return s;
}

Matrix normalize_apply(const NormalizationStats& stats, const Matrix& data) {
  if (data.cols() != stats.means.size()) throw DimensionMismatch("normalize_apply", stats.means.size(), data.cols());
  Matrix out(data.rows(), data.cols());
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c)
      out(r, c) = stats.constant[c] ? 0.0 : (data(r, c) - stats.means[c]) / stats.stds[c];
  return out;
}

Matrix correlation_matrix(const Matrix& normalized) {
  const std::size_t n = normalized.rows();
  const std::size_t d = normalized.cols();
  if (n == 0) throw InvalidArgument("correlation_matrix: empty data");
  Matrix r(d, d);
  for (std::size_t row = 0; row < n; ++row) {
    const auto x = normalized.row(row);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = i; j < d; ++j) r(i, j) += xi * x[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      r(i, j) /= static_cast<double>(n);
      r(j, i) = r(i, j);
    }
  return r;
}

namespace {

std::vector<std::size_t> greedy_independent(const Matrix& corr, double tol) {
  const std::size_t d = corr.rows();
  std::vector<std::size_t> kept;
  // Rows of the Cholesky factor of corr restricted to the kept columns.
  std::vector<Vector> chol;
  for (std::size_t j = 0; j < d; ++j) {
    Vector y(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      double s = corr(kept[i], j);
      for (std::size_t k = 0; k < i; ++k) s -= chol[i][k] * y[k];
      y[i] = s / chol[i][i];
    }
    double residual = corr(j, j);
    for (double v : y) residual -= v * v;
    if (residual <= tol) continue;
    y.push_back(std::sqrt(residual));
    chol.push_back(std::move(y));
    kept.push_back(j);
  }
  return kept;
}

}  // namespace

std::vector<std::size_t> eliminate_dependent(const Matrix& correlation, double tol) {
  if (correlation.rows() != correlation.cols()) throw InvalidArgument("eliminate_dependent needs a square matrix");
  std::vector<std::size_t> kept = greedy_independent(correlation, tol);

  // The greedy pivots bound the smallest eigenvalue only from above; drop
  // further columns until the kept block is comfortably non-singular.
  while (kept.size() > 1) {
    const auto eig = eig_sym(correlation.select(kept, kept));
    const std::size_t last = kept.size() - 1;
    if (eig.values[last] > tol) break;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < kept.size(); ++i)
      if (std::abs(eig.vectors(i, last)) >= std::abs(eig.vectors(worst, last))) worst = i;
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return kept;
}

std::size_t choose_components(std::span<const double> eigenvalues_desc, double retain) {
  if (!(retain > 0.0 && retain <= 1.0)) throw InvalidArgument("retain fraction must lie in (0, 1]");
  double total = 0.0;
  for (double v : eigenvalues_desc) total += v;
  if (!(total > 0.0)) return 0;
  double cumulative = 0.0;
  for (std::size_t p = 0; p < eigenvalues_desc.size(); ++p) {
    cumulative += eigenvalues_desc[p];
    if (cumulative >= retain * total) return p + 1;
  }
  return eigenvalues_desc.size();
}

PcaBasis pca_fit(const Matrix& normalized, double retain) {
  if (!(retain > 0.0 && retain <= 1.0)) throw InvalidArgument("retain fraction must lie in (0, 1]");
  const Matrix corr = correlation_matrix(normalized);
  auto eig = eig_sym(corr);

  double trace = 0.0;
  for (std::size_t i = 0; i < corr.rows(); ++i) trace += corr(i, i);
  const double zero = 1e-12 * std::max(1.0, trace);
  for (double& v : eig.values)
    if (v < zero) v = 0.0;

  PcaBasis out;
  out.eigenvalues = eig.values;
  out.components = choose_components(eig.values, retain);
  out.basis = Matrix(out.components, corr.cols());
  for (std::size_t k = 0; k < out.components; ++k)
    for (std::size_t j = 0; j < corr.cols(); ++j) out.basis(k, j) = eig.vectors(j, k);
  return out;
}

ReductionPipeline fit_pipeline(const Matrix& data, const PipelineOptions& options) {
  const NormalizationStats stats = normalize_fit(data);
  std::vector<std::size_t> varying;
  for (std::size_t c = 0; c < data.cols(); ++c)
    if (!stats.constant[c]) varying.push_back(c);

  ReductionPipeline p;
  p.means = stats.means;
  p.stds = stats.stds;
  p.retain = options.retain;
  if (varying.empty()) return p;

  const Matrix normalized = normalize_apply(stats, data).select_columns(varying);
  const auto local = eliminate_dependent(correlation_matrix(normalized), options.dependence_tolerance);
  for (auto i : local) p.kept.push_back(varying[i]);

  const PcaBasis pca = pca_fit(normalized.select_columns(local), options.retain);
  p.basis = pca.basis;
  p.eigenvalues = pca.eigenvalues;
  return p;
}

Vector select_normalized(const ReductionPipeline& pipeline, std::span<const double> x) {
  if (x.size() != pipeline.input_dim()) throw DimensionMismatch("pipeline input", pipeline.input_dim(), x.size());
  Vector z(pipeline.kept.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto c = pipeline.kept[i];
    z[i] = (x[c] - pipeline.means[c]) / pipeline.stds[c];
  }
  return z;
}

Vector project(const ReductionPipeline& pipeline, std::span<const double> x) {
  const Vector z = select_normalized(pipeline, x);
  if (pipeline.basis.rows() == 0) return {};
  return pipeline.basis * std::span<const double>(z);
}

Matrix project_rows(const ReductionPipeline& pipeline, const Matrix& data) {
  Matrix out(data.rows(), pipeline.output_dim());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const Vector y = project(pipeline, data.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

double mean_reconstruction_error(const Matrix& basis, const Matrix& normalized) {
  if (basis.cols() != normalized.cols()) throw DimensionMismatch("reconstruction", basis.cols(), normalized.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    const auto x = normalized.row(r);
    const Vector c = basis * x;
    for (std::size_t j = 0; j < x.size(); ++j) {
      double xhat = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) xhat += basis(k, j) * c[k];
      total += (x[j] - xhat) * (x[j] - xhat);
    }
  }
  return 0.5 * total / static_cast<double>(normalized.rows());
}

}  // namespace stacksense::dimred
