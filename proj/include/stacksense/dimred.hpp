#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stacksense/matrix.hpp"

namespace stacksense::dimred {

// Columns whose population standard deviation falls below this are constant.
inline constexpr double kConstantStd = 1e-12;
inline constexpr double kDefaultDependenceTolerance = 1e-8;
inline constexpr double kDefaultRetain = 0.98;

struct NormalizationStats {
  Vector means;
  Vector stds;                // population (divide by N)
  std::vector<bool> constant; // std < kConstantStd
};

// Requires N >= 2 rows.
NormalizationStats normalize_fit(const Matrix& data);
// (x - mean) / std per column; constant columns map to 0.
Matrix normalize_apply(const NormalizationStats& stats, const Matrix& data);

// R_ij = E[X_i X_j] = (1/N) sum_n x_i^n x_j^n over normalised columns.
Matrix correlation_matrix(const Matrix& normalized);

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column i is the unit eigenvector of values[i]
  std::size_t rotations = 0;
};

// Cyclic Jacobi rotations for a symmetric matrix. Each eigenvector is signed
// so its largest-magnitude entry is positive. Throws InvalidArgument for a
// non-symmetric input and NotConverged past 100 d^2 rotations.
EigenDecomposition eig_sym(const Matrix& m);

// Greedy scan in column order: a column is kept iff it is not linearly
// dependent (residual variance <= tol) on the columns kept before it.
std::vector<std::size_t> eliminate_dependent(const Matrix& correlation,
                                             double tol = kDefaultDependenceTolerance);

struct PcaBasis {
  Matrix basis;       // p x d', rows orthonormal
  Vector eigenvalues; // all d' eigenvalues of R, descending, clamped at 0
  std::size_t components = 0;  // p
};

// Smallest p with sum_{i<=p} lambda_i >= retain * sum_i lambda_i.
std::size_t choose_components(std::span<const double> eigenvalues_desc, double retain);

// Data must already be normalised and rank-reduced. retain in (0, 1].
PcaBasis pca_fit(const Matrix& normalized, double retain = kDefaultRetain);

// Input normalisation, dependent-column elimination and PCA projection.
struct ReductionPipeline {
  Vector means;
  Vector stds;
  std::vector<std::size_t> kept;  // indices into the raw input, ascending
  Matrix basis;                   // p x kept.size()
  Vector eigenvalues;             // kept.size() values, descending
  double retain = kDefaultRetain;

  std::size_t input_dim() const noexcept { return means.size(); }
  std::size_t output_dim() const noexcept { return basis.rows(); }

  bool operator==(const ReductionPipeline&) const = default;
};

struct PipelineOptions {
  double retain = kDefaultRetain;
  double dependence_tolerance = kDefaultDependenceTolerance;
};

ReductionPipeline fit_pipeline(const Matrix& data, const PipelineOptions& options = {});

// Normalised, kept-column view of a raw vector (before the basis).
Vector select_normalized(const ReductionPipeline& pipeline, std::span<const double> x);
Vector project(const ReductionPipeline& pipeline, std::span<const double> x);
Matrix project_rows(const ReductionPipeline& pipeline, const Matrix& data);

// 1/2 sum_n ||x^n - U^T U x^n||^2 over rows already in the normalised kept
// space, divided by N.
double mean_reconstruction_error(const Matrix& basis, const Matrix& normalized);

}  // namespace stacksense::dimred
