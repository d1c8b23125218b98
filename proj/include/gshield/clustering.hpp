#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gshield/graph.hpp"
#include "gshield/matrix.hpp"
#include "gshield/rng.hpp"

namespace gshield {

/// Partition of node indices into clusters. Cluster ids are canonical: they
/// are numbered by first occurrence in node order, so ids [0, k_effective)
/// are exactly the non-empty clusters.
struct ClusterAssignment {
  std::vector<std::size_t> labels;
  /// Requested cluster count.
  std::size_t k = 1;
  /// Number of non-empty clusters, <= k.
  std::size_t k_effective = 1;

  std::vector<std::vector<NodeId>> members() const;
  std::vector<std::size_t> sizes() const;

  /// Relabels `raw` by first occurrence and fills k_effective.
  static ClusterAssignment canonical(const std::vector<std::size_t>& raw,
                                     std::size_t k);
};

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver
// ---------------------------------------------------------------------------

struct EigenDecomposition {
  /// Ascending.
  std::vector<double> values;
  /// Column j is the unit eigenvector for values[j].
  DenseMatrix vectors;
  int sweeps = 0;
};

struct JacobiOptions {
  int max_sweeps = 100;
  /// Stop once the off-diagonal Frobenius norm falls below
  /// relative_tolerance * ||A||_F.
  double relative_tolerance = 1e-15;
};

/// Cyclic Jacobi rotation method. The input must be square and symmetric.
/// Eigenvector signs are normalized so the first entry of largest magnitude
/// is positive.
EigenDecomposition symmetric_eigen(const DenseMatrix& a,
                                   const JacobiOptions& options = {});

// ---------------------------------------------------------------------------
// Spectral clustering
// ---------------------------------------------------------------------------

/// L = I - D^{-1/2} A D^{-1/2}. Isolated nodes get the identity row.
DenseMatrix normalized_laplacian(const AdjacencyMatrix& a);

struct SpectralEmbedding {
  /// n x k, columns are unit-norm eigenvectors of the k smallest eigenvalues.
  DenseMatrix vectors;
  std::vector<double> eigenvalues;
};

SpectralEmbedding spectral_embedding(const DenseMatrix& laplacian,
                                     std::size_t k);

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  DenseMatrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// k-means++ seeding: first center uniform, then D^2-weighted. When every
/// remaining distance is zero, the lowest-index unchosen row is used.
DenseMatrix kmeans_plus_plus(const DenseMatrix& points, std::size_t k,
                             Rng& rng);

/// Lloyd iterations from k-means++ seeds, best-of-restarts by inertia.
/// Assignment ties go to the lowest centroid index; empty clusters are
/// reseeded at the point farthest from its centroid.
KMeansResult kmeans(const DenseMatrix& points, std::size_t k,
                    std::uint64_t seed, const KMeansOptions& options = {});

/// k-way normalized spectral clustering of the graph topology. k is clamped
/// to [1, n]. Row-normalized embedding rows are clustered by k-means; if the
/// embedding has fewer distinct rows than k, nodes are instead split into k
/// contiguous groups by rank of their Fiedler coordinate.
ClusterAssignment spectral_cluster(const Graph& g, std::size_t k,
                                   std::uint64_t seed,
                                   const KMeansOptions& options = {});

// ---------------------------------------------------------------------------
// Gaussian mixture over node features
// ---------------------------------------------------------------------------

/// Diagonal-covariance Gaussian mixture. Fitting always uses 2 components.
struct GaussianMixtureModel {
  std::vector<double> weights;
  /// components x d
  DenseMatrix means;
  /// components x d
  DenseMatrix variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }
};

struct GmmOptions {
  std::size_t max_iterations = 200;
  /// Stop when the log-likelihood improves by less than this.
  double tolerance = 1e-7;
  /// Per-dimension variance floor is scale * (global variance + 1e-12).
  double variance_floor_scale = 1e-6;
};

struct GmmFit {
  GaussianMixtureModel model;
  ClusterAssignment assignment;
  /// Log-likelihood at initialization and after every EM step.
  std::vector<double> log_likelihood_trace;
  bool collapsed = false;
};

/// Total log-density of the rows under the mixture. Throws
/// std::invalid_argument when the dimensions differ.
double em_log_likelihood(const GaussianMixtureModel& model,
                         const DenseMatrix& features);

/// Fits a 2-component mixture by EM. Requires at least 2 rows. When every
/// row is identical, returns all nodes in one cluster without iterating.
GmmFit fit_gmm(const DenseMatrix& features, std::uint64_t seed,
               const GmmOptions& options = {});

ClusterAssignment gmm_cluster(const DenseMatrix& features, std::uint64_t seed,
                              const GmmOptions& options = {});

}  // namespace gshield
