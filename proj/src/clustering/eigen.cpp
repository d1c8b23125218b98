#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gshield/clustering.hpp"

namespace gshield {

namespace {

double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  }
  return std::sqrt(2.0 * s);
}

double frobenius(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition symmetric_eigen(const DenseMatrix& input,
                                   const JacobiOptions& options) {
  const std::size_t n = input.rows();
  if (input.cols() != n) {
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double scale = std::max({1.0, std::abs(input(i, j)),
                               std::abs(input(j, i))});
      if (std::abs(input(i, j) - input(j, i)) > 1e-12 * scale) {
        throw std::invalid_argument("symmetric_eigen: matrix not symmetric");
      }
    }
  }

  DenseMatrix a = input;
  DenseMatrix v = DenseMatrix::identity(n);
  const double threshold = options.relative_tolerance * frobenius(a);
  int sweep = 0;
  for (; sweep < options.max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rotation angle chosen so the updated (p, q) entry vanishes.
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double new_kp = c * akp - s * akq;
          const double new_kq = s * akp + c * akq;
          a(k, p) = a(p, k) = new_kp;
          a(k, q) = a(q, k) = new_kq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a(x, x) < a(y, y);
  });

  EigenDecomposition out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (std::abs(v(k, src)) > std::abs(v(pivot, src)) + 1e-12) pivot = k;
    }
    const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * v(k, src);
  }
  return out;
}

}  // namespace gshield
