#include <algorithm>
#include <cmath>
#include <numeric>

#include "gshield/clustering.hpp"

namespace gshield {

DenseMatrix normalized_laplacian(const AdjacencyMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (double x : a.row(i)) d += x;
    inv_sqrt_degree[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  DenseMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    l(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || a(i, j) == 0.0) continue;
      l(i, j) = -a(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];
    }
  }
  return l;
}

SpectralEmbedding spectral_embedding(const DenseMatrix& laplacian,
                                     std::size_t k) {
  EigenDecomposition eig = symmetric_eigen(laplacian);
  const std::size_t n = laplacian.rows();
  k = std::min(k, n);
  SpectralEmbedding emb;
  emb.vectors = DenseMatrix(n, k);
  emb.eigenvalues.assign(eig.values.begin(), eig.values.begin() + k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) emb.vectors(i, j) = eig.vectors(i, j);
  }
  return emb;
}

namespace {

std::size_t distinct_rows(const DenseMatrix& m, double tolerance) {
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool seen = false;
    for (std::size_t r : reps) {
      double d = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j) {
        d = std::max(d, std::abs(m(i, j) - m(r, j)));
      }
      if (d <= tolerance) {
        seen = true;
        break;
      }
    }
    if (!seen) reps.push_back(i);
  }
  return reps.size();
}

std::vector<std::size_t> fiedler_rank_groups(const SpectralEmbedding& emb,
                                             std::size_t k) {
  const std::size_t n = emb.vectors.rows();
  const std::size_t column = emb.vectors.cols() > 1 ? 1 : 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return emb.vectors(a, column) < emb.vectors(b, column);
  });
  std::vector<std::size_t> labels(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    labels[order[rank]] = rank * k / n;
  }
  return labels;
}

}  // namespace

ClusterAssignment spectral_cluster(const Graph& g, std::size_t k,
                                   std::uint64_t seed,
                                   const KMeansOptions& options) {
  const std::size_t n = g.node_count();
  if (n == 0) return ClusterAssignment{{}, std::max<std::size_t>(k, 1), 0};
  const std::size_t requested = std::max<std::size_t>(k, 1);
  const std::size_t k_eff = std::min(requested, n);
  if (k_eff == 1) {
    return ClusterAssignment::canonical(std::vector<std::size_t>(n, 0),
                                        requested);
  }

  SpectralEmbedding emb =
      spectral_embedding(normalized_laplacian(adjacency(g)), k_eff);
  DenseMatrix rows = emb.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = rows.row(i);
    const double norm = norm2(r);
    if (norm > 1e-12) {
      for (double& x : r) x /= norm;
    }
  }

  if (distinct_rows(rows, 1e-10) < k_eff) {
    return ClusterAssignment::canonical(fiedler_rank_groups(emb, k_eff),
                                        requested);
  }
  KMeansResult km = kmeans(rows, k_eff, seed, options);
  return ClusterAssignment::canonical(km.labels, requested);
}

}  // namespace gshield
