#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gshield/clustering.hpp"

namespace gshield {

std::vector<std::vector<NodeId>> ClusterAssignment::members() const {
  std::vector<std::vector<NodeId>> out(k_effective);
  for (NodeId i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> out(k_effective, 0);
  for (auto l : labels) ++out[l];
  return out;
}

ClusterAssignment ClusterAssignment::canonical(
    const std::vector<std::size_t>& raw, std::size_t k) {
  ClusterAssignment out;
  out.k = k;
  out.labels.resize(raw.size());
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::size_t max_raw = 0;
  for (auto r : raw) max_raw = std::max(max_raw, r);
  std::vector<std::size_t> rename(max_raw + 1, kUnset);
  std::size_t next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (rename[raw[i]] == kUnset) rename[raw[i]] = next++;
    out.labels[i] = rename[raw[i]];
  }
  out.k_effective = next;
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct LloydRun {
  std::vector<std::size_t> labels;
  DenseMatrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

std::size_t nearest(const DenseMatrix& centroids, std::span<const double> x,
                    double* best_distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_distance) *best_distance = best_d;
  return best;
}

LloydRun lloyd(const DenseMatrix& points, DenseMatrix centroids,
               const KMeansOptions& options) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  const std::size_t d = points.cols();
  LloydRun run;
  run.labels.assign(n, 0);
  std::vector<double> dist(n, 0.0);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    run.iterations = iter + 1;
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      run.labels[i] = nearest(centroids, points.row(i), &dist[i]);
      ++counts[run.labels[i]];
    }
    // Empty-cluster repair: move the worst-fit point that is not the sole
    // member of its cluster.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[run.labels[i]] <= 1) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;
      --counts[run.labels[far]];
      run.labels[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
      auto dst = centroids.row(c);
      auto src = points.row(far);
      std::copy(src.begin(), src.end(), dst.begin());
    }

    DenseMatrix updated(k, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = updated.row(run.labels[i]);
      auto x = points.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += x[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = updated.row(c);
      if (counts[c] == 0) {
        auto old = centroids.row(c);
        std::copy(old.begin(), old.end(), row.begin());
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) row[j] /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(row, centroids.row(c))));
    }
    centroids = std::move(updated);
    if (shift < options.tolerance) break;
  }

  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.labels[i] = nearest(centroids, points.row(i), &dist[i]);
    run.inertia += dist[i];
  }
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

DenseMatrix kmeans_plus_plus(const DenseMatrix& points, std::size_t k,
                             Rng& rng) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n) {
    throw std::invalid_argument("kmeans_plus_plus: need 1 <= k <= n");
  }
  DenseMatrix centers(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.uniform_below(n);
  chosen[first] = true;
  auto copy_row = [&](std::size_t c, std::size_t i) {
    auto src = points.row(i);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  };
  copy_row(0, first);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(points.row(i), centers.row(0));
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    copy_row(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
    }
  }
  return centers;
}

KMeansResult kmeans(const DenseMatrix& points, std::size_t k,
                    std::uint64_t seed, const KMeansOptions& options) {
  if (k == 0 || k > points.rows()) {
    throw std::invalid_argument("kmeans: need 1 <= k <= n");
  }
  Rng rng(seed);
  KMeansResult best;
  bool have = false;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    LloydRun run = lloyd(points, kmeans_plus_plus(points, k, rng), options);
    if (!have || run.inertia < best.inertia) {
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.iterations = run.iterations;
      have = true;
    }
  }
  return best;
}

}  // namespace gshield
