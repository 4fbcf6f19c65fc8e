#include <algorithm>
#include <cmath>
#include <numeric>

#include "stacksense/dimred.hpp"
#include "stacksense/error.hpp"

namespace stacksense::dimred {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kOffDiagonalTolerance = 1e-12;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Zeroes a(p, q) with a plane rotation applied on both sides; accumulates the
// rotation into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  if (theta < 0.0) t = -t;
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const double tau = s / (1.0 + c);

  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = a(q, p) = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == p || r == q) continue;
    const double arp = a(r, p);
    const double arq = a(r, q);
    a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
    a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const double vrp = v(r, p);
    const double vrq = v(r, q);
    v(r, p) = vrp - s * (vrq + tau * vrp);
    v(r, q) = vrq + s * (vrp - tau * vrq);
  }
}

}  // namespace

EigenDecomposition eig_sym(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("eig_sym needs a square matrix");
  const std::size_t n = m.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) >= kSymmetryTolerance)
        throw InvalidArgument("eig_sym input is not symmetric");
      a(i, j) = 0.5 * (m(i, j) + m(j, i));
    }

  Matrix v = Matrix::identity(n);
  const double scale = norm_frobenius(a);
  const double target = scale > 0.0 ? kOffDiagonalTolerance * scale : 0.0;
  const std::size_t cap = 100 * n * n;
  std::size_t rotations = 0;

  while (off_diagonal_norm(a) > target) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Below round-off relative to both diagonal entries: drop it.
        if (std::abs(a(p, p)) + 100.0 * std::abs(apq) == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + 100.0 * std::abs(apq) == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        if (rotations == cap) throw NotConverged("eig_sym exceeded " + std::to_string(cap) + " rotations");
        rotate(a, v, p, q);
        ++rotations;
        rotated = true;
      }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.rotations = rotations;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    std::size_t big = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(big, src))) big = r;
    const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
  }
  return out;
}

}  // namespace stacksense::dimred
