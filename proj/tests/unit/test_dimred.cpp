#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../common/oracles.hpp"
#include "stacksense/dimred.hpp"
#include "stacksense/error.hpp"

using namespace stacksense;
using namespace stacksense::dimred;

namespace {

// Independent reconstruction error: 1/(2N) sum_n ||x - U^T U x||^2.
double direct_error(const Matrix& basis, const Matrix& x) {
  double total = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    Vector c(basis.rows(), 0.0);
    for (std::size_t k = 0; k < basis.rows(); ++k)
      for (std::size_t j = 0; j < x.cols(); ++j) c[k] += basis(k, j) * x(n, j);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double r = x(n, j);
      for (std::size_t k = 0; k < basis.rows(); ++k) r -= basis(k, j) * c[k];
      total += r * r;
    }
  }
  return 0.5 * total / static_cast<double>(x.rows());
}

// Columns with a few shared latent factors so the spectrum is uneven.
Matrix correlated(oracle::Gen& g, std::size_t n, std::size_t d) {
  const std::size_t f = g.index(1, d);
  const Matrix mix = g.mat(f, d);
  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const Vector z = g.vec(f);
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.1 * g.uniform(-1, 1);
      for (std::size_t k = 0; k < f; ++k) v += z[k] * mix(k, c);
      x(r, c) = v;
    }
  }
  return x;
}

Matrix normalized_random(oracle::Gen& g, std::size_t n, std::size_t d) {
  const Matrix raw = correlated(g, n, d);
  return normalize_apply(normalize_fit(raw), raw);
}

}  // namespace

TEST_CASE("normalisation") {
  SUBCASE("constant column") {
    const auto s = normalize_fit(Matrix{{5, 1}, {5, 2}, {5, 3}});
    CHECK(s.constant[0]);
    CHECK_FALSE(s.constant[1]);
    const Matrix z = normalize_apply(s, Matrix{{5, 1}});
    CHECK(z(0, 0) == 0.0);
  }
  SUBCASE("two-point column") {
    const auto s = normalize_fit(Matrix{{-1}, {1}});
    CHECK(s.means[0] == 0.0);
    CHECK(s.stds[0] == 1.0);
  }
  SUBCASE("random data normalises to mean 0, population std 1") {
    oracle::Gen g(1);
    const Matrix x = g.mat(20, 4, -10, 30);
    const Matrix z = normalize_apply(normalize_fit(x), x);
    for (std::size_t c = 0; c < 4; ++c) {
      double m = 0, v = 0;
      for (std::size_t r = 0; r < 20; ++r) m += z(r, c);
      m /= 20;
      for (std::size_t r = 0; r < 20; ++r) v += (z(r, c) - m) * (z(r, c) - m);
      CHECK(std::abs(m) < 1e-10);
      CHECK(std::abs(std::sqrt(v / 20) - 1.0) < 1e-10);
    }
  }
  SUBCASE("too little data") {
    CHECK_THROWS_AS(normalize_fit(Matrix(1, 3)), InvalidArgument);
    CHECK_THROWS_AS(normalize_fit(Matrix()), InvalidArgument);
    CHECK_THROWS_AS(normalize_apply(normalize_fit(Matrix{{1}, {2}}), Matrix{{1, 2}}), DimensionMismatch);
  }
}

TEST_CASE("correlation matrix") {
  SUBCASE("duplicate columns correlate fully") {
    oracle::Gen g(2);
    Matrix x(30, 2);
    for (std::size_t r = 0; r < 30; ++r) x(r, 0) = x(r, 1) = g.uniform(-1, 1);
    const Matrix r = correlation_matrix(normalize_apply(normalize_fit(x), x));
    CHECK(std::abs(r(0, 1) - 1.0) < 1e-10);
  }
  SUBCASE("independent coin flips") {
    oracle::Gen g(3);
    Matrix x(10000, 3);
    for (auto& v : x.data()) v = g.coin() ? 1.0 : -1.0;
    const Matrix r = correlation_matrix(normalize_apply(normalize_fit(x), x));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) CHECK(std::abs(r(i, j)) < 0.05);
  }
  SUBCASE("one column") {
    const Matrix x{{1}, {2}, {4}};
    const Matrix r = correlation_matrix(normalize_apply(normalize_fit(x), x));
    CHECK(r.rows() == 1);
    CHECK(r(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("N R equals the scatter matrix of normalised data") {
    oracle::Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = g.index(2, 60), d = g.index(1, 8);
      const Matrix z = normalized_random(g, n, d);
      const Matrix r = correlation_matrix(z);
      for (std::size_t i = 0; i < d; ++i) {
        CHECK(std::abs(r(i, i) - 1.0) < 1e-8);
        for (std::size_t j = 0; j < d; ++j) {
          double mi = 0, mj = 0;
          for (std::size_t k = 0; k < n; ++k) mi += z(k, i), mj += z(k, j);
          mi /= static_cast<double>(n), mj /= static_cast<double>(n);
          double zij = 0;
          for (std::size_t k = 0; k < n; ++k) zij += (z(k, i) - mi) * (z(k, j) - mj);
          CHECK(std::abs(static_cast<double>(n) * r(i, j) - zij) < 1e-8 * std::max(1.0, std::abs(zij)));
          CHECK(r(i, j) == r(j, i));
        }
      }
    }
  }
}

TEST_CASE("symmetric eigensolver") {
  SUBCASE("identity") {
    const auto e = eig_sym(Matrix::identity(3));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("diagonal is sorted") {
    const auto e = eig_sym(Matrix{{3, 0, 0}, {0, 1, 0}, {0, 0, 2}});
    CHECK(e.values == Vector{3, 2, 1});
  }
  SUBCASE("2x2 by hand") {
    const auto e = eig_sym(Matrix{{2, 1}, {1, 2}});
    CHECK(e.values[0] == doctest::Approx(3.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(e.vectors(0, 0) == doctest::Approx(s));
    CHECK(e.vectors(1, 0) == doctest::Approx(s));
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(s));
    CHECK(e.vectors(0, 1) == doctest::Approx(-e.vectors(1, 1)));
  }
  SUBCASE("random symmetric matrices: residuals, orthonormality, sign rule") {
    oracle::Gen g(5);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t d = g.index(1, 25);
      Matrix m = g.mat(d, d, -3, 3);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
      const auto e = eig_sym(m);
      const double scale = std::max(1.0, norm_inf(m));
      for (std::size_t k = 0; k < d; ++k) {
        const Vector v = e.vectors.column(k);
        Vector mv = oracle::matvec(m, v);
        for (std::size_t i = 0; i < d; ++i) mv[i] -= e.values[k] * v[i];
        CHECK(oracle::norm(mv) < 1e-8 * scale);
        if (k + 1 < d) CHECK(e.values[k] >= e.values[k + 1]);
        std::size_t big = 0;
        for (std::size_t i = 1; i < d; ++i)
          if (std::abs(v[i]) > std::abs(v[big])) big = i;
        CHECK(v[big] > 0.0);
        for (std::size_t l = 0; l < d; ++l)
          CHECK(std::abs(dot(v, e.vectors.column(l)) - (k == l ? 1.0 : 0.0)) < 1e-10);
      }
    }
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(eig_sym(Matrix{{1, 2}, {0, 1}}), InvalidArgument);
    CHECK_THROWS_AS(eig_sym(Matrix(2, 3)), InvalidArgument);
  }
}

TEST_CASE("dependent column elimination") {
  oracle::Gen g(6);
  auto corr_of = [](const Matrix& x) { return correlation_matrix(normalize_apply(normalize_fit(x), x)); };
  SUBCASE("exact duplicate keeps one") {
    Matrix x(40, 3);
    for (std::size_t r = 0; r < 40; ++r) {
      x(r, 0) = g.uniform(-1, 1);
      x(r, 1) = x(r, 0);
      x(r, 2) = g.uniform(-1, 1);
    }
    const auto kept = eliminate_dependent(corr_of(x));
    CHECK(kept.size() == 2);
    CHECK(std::count_if(kept.begin(), kept.end(), [](auto k) { return k < 2; }) == 1);
  }
  SUBCASE("a sum of two columns is caught") {
    Matrix x(50, 4);
    for (std::size_t r = 0; r < 50; ++r) {
      x(r, 0) = g.uniform(-1, 1);
      x(r, 1) = g.uniform(-1, 1);
      x(r, 2) = x(r, 0) + x(r, 1);
      x(r, 3) = g.uniform(-1, 1);
    }
    const auto kept = eliminate_dependent(corr_of(x));
    CHECK(kept.size() == 3);
    CHECK(std::count_if(kept.begin(), kept.end(), [](auto k) { return k < 3; }) == 2);
    const Matrix z = normalize_apply(normalize_fit(x), x).select_columns(kept);
    CHECK(oracle::numerical_rank(z, 1e-6) == kept.size());
  }
  SUBCASE("orthogonal columns all survive") {
    Matrix x{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    CHECK(eliminate_dependent(corr_of(x)) == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("idempotent and well conditioned") {
    for (int trial = 0; trial < 30; ++trial) {
      const Matrix z = normalized_random(g, g.index(10, 60), g.index(2, 12));
      const Matrix r = correlation_matrix(z);
      const auto kept = eliminate_dependent(r);
      const Matrix sub = r.select(kept, kept);
      std::vector<std::size_t> all(kept.size());
      std::iota(all.begin(), all.end(), 0);
      CHECK(eliminate_dependent(sub) == all);
      CHECK(eig_sym(sub).values.back() > kDefaultDependenceTolerance);
    }
  }
}

TEST_CASE("principal components") {
  SUBCASE("points on y = x") {
    Matrix x(20, 2);
    for (std::size_t r = 0; r < 20; ++r) x(r, 0) = x(r, 1) = static_cast<double>(r);
    const Matrix z = normalize_apply(normalize_fit(x), x);
    const auto p = pca_fit(z, 0.98);
    CHECK(p.components == 1);
    CHECK(p.basis(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(p.basis(0, 1) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(std::abs(p.eigenvalues[1]) < 1e-10);
  }
  SUBCASE("retain 1 keeps every nonzero eigenvalue") {
    Matrix x(30, 3);
    oracle::Gen g(7);
    for (std::size_t r = 0; r < 30; ++r) {
      x(r, 0) = g.uniform(-1, 1);
      x(r, 1) = g.uniform(-1, 1);
      x(r, 2) = x(r, 0) - 2 * x(r, 1);
    }
    const auto p = pca_fit(normalize_apply(normalize_fit(x), x), 1.0);
    CHECK(p.components == 2);
  }
  SUBCASE("component count is the minimal one") {
    CHECK(choose_components(Vector{5, 3, 1, 1}, 0.5) == 1);
    CHECK(choose_components(Vector{5, 3, 1, 1}, 0.8) == 2);
    CHECK(choose_components(Vector{5, 3, 1, 1}, 0.81) == 3);
    CHECK(choose_components(Vector{5, 3, 1, 1}, 1.0) == 4);
    CHECK(choose_components(Vector{0, 0}, 0.9) == 0);
    CHECK_THROWS_AS(choose_components(Vector{1}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(pca_fit(Matrix{{1}, {-1}}, 1.5), InvalidArgument);
  }
  SUBCASE("reconstruction error is half the discarded eigenvalue sum") {
    oracle::Gen g(8);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix z = normalized_random(g, 50, 6);
      const auto p = pca_fit(z, g.uniform(0.3, 1.0));
      double tail = 0.0;
      for (std::size_t i = p.components; i < p.eigenvalues.size(); ++i) tail += p.eigenvalues[i];
      CHECK(std::abs(direct_error(p.basis, z) - 0.5 * tail) < 1e-8);
      CHECK(std::abs(mean_reconstruction_error(p.basis, z) - direct_error(p.basis, z)) < 1e-12);
      // basis rows orthonormal
      for (std::size_t a = 0; a < p.components; ++a)
        for (std::size_t b = 0; b < p.components; ++b)
          CHECK(std::abs(dot(p.basis.row(a), p.basis.row(b)) - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
  }
}

TEST_CASE("reduction pipeline") {
  oracle::Gen g(9);
  SUBCASE("the mean vector projects to zero") {
    const Matrix x = correlated(g, 40, 5);
    const auto p = fit_pipeline(x);
    const Vector y = project(p, p.means);
    for (double v : y) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("identity basis gives the normalised input") {
    ReductionPipeline p;
    p.means = {1, 2};
    p.stds = {2, 4};
    p.kept = {0, 1};
    p.basis = Matrix::identity(2);
    p.eigenvalues = {1, 1};
    const Vector y = project(p, Vector{3, 10});
    CHECK(y == Vector{1, 2});
    CHECK_THROWS_AS(project(p, Vector{1}), DimensionMismatch);
  }
  SUBCASE("constant and duplicate inputs are dropped") {
    Matrix x(30, 4);
    for (std::size_t r = 0; r < 30; ++r) {
      x(r, 0) = 7;
      x(r, 1) = g.uniform(-1, 1);
      x(r, 2) = 3 * x(r, 1) + 1;
      x(r, 3) = g.uniform(-1, 1);
    }
    const auto p = fit_pipeline(x);
    CHECK(p.kept == std::vector<std::size_t>{1, 3});
    CHECK(p.input_dim() == 4);
  }
  SUBCASE("all-constant data reduces to nothing") {
    const auto p = fit_pipeline(Matrix(5, 3, 1.0));
    CHECK(p.kept.empty());
    CHECK(p.output_dim() == 0);
    CHECK(project(p, Vector{1, 1, 1}).empty());
  }
  SUBCASE("projected variances equal the eigenvalues") {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = correlated(g, 200, g.index(2, 10));
      const auto p = fit_pipeline(x);
      const Matrix y = project_rows(p, x);
      for (std::size_t k = 0; k < p.output_dim(); ++k) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < y.rows(); ++r) m += y(r, k);
        m /= static_cast<double>(y.rows());
        for (std::size_t r = 0; r < y.rows(); ++r) v += (y(r, k) - m) * (y(r, k) - m);
        v /= static_cast<double>(y.rows());
        CHECK(v == doctest::Approx(p.eigenvalues[k]).epsilon(0.05));
      }
      double kept = 0, total = 0;
      for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
        total += p.eigenvalues[i];
        if (i < p.output_dim()) kept += p.eigenvalues[i];
        CHECK(p.eigenvalues[i] >= -1e-8);
      }
      CHECK(kept >= p.retain * total - 1e-12);
    }
  }
  SUBCASE("reconstructing a training point loses only the discarded components") {
    const Matrix x = correlated(g, 60, 6);
    PipelineOptions o;
    o.retain = 0.8;
    const auto p = fit_pipeline(x, o);
    const auto e = eig_sym(correlation_matrix(normalize_apply(normalize_fit(x), x).select_columns(p.kept)));
    for (std::size_t r = 0; r < 5; ++r) {
      const Vector z = select_normalized(p, x.row(r));
      const Vector c = project(p, x.row(r));
      double lost = 0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        double xhat = 0;
        for (std::size_t k = 0; k < c.size(); ++k) xhat += p.basis(k, j) * c[k];
        lost += (z[j] - xhat) * (z[j] - xhat);
      }
      double tail = 0;
      for (std::size_t k = p.output_dim(); k < z.size(); ++k) {
        const double comp = dot(e.vectors.column(k), z);
        tail += comp * comp;
      }
      CHECK(lost == doctest::Approx(tail).epsilon(1e-8));
    }
  }
}
