#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gshield/clustering.hpp"

namespace gshield {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::size_t kComponents = 2;

/// log(w_c) + log N(x | mu_c, diag(var_c)) for every row and component.
DenseMatrix component_log_densities(const GaussianMixtureModel& model,
                                    const DenseMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t m = model.components();
  DenseMatrix out(n, m);
  for (std::size_t c = 0; c < m; ++c) {
    if (model.weights[c] <= 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        out(i, c) = -std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double constant = std::log(model.weights[c]);
    for (std::size_t j = 0; j < d; ++j) {
      constant -= 0.5 * (kLog2Pi + std::log(model.variances(c, j)));
    }
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x(i, j) - model.means(c, j);
        q += diff * diff / model.variances(c, j);
      }
      out(i, c) = constant - 0.5 * q;
    }
  }
  return out;
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

bool all_rows_identical(const DenseMatrix& x) {
  for (std::size_t i = 1; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j) != x(0, j)) return false;
    }
  }
  return true;
}

ClusterAssignment argmax_assignment(const DenseMatrix& log_density) {
  std::vector<std::size_t> raw(log_density.rows());
  for (std::size_t i = 0; i < log_density.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < log_density.cols(); ++c) {
      if (log_density(i, c) > log_density(i, best)) best = c;
    }
    raw[i] = best;
  }
  return ClusterAssignment::canonical(raw, log_density.cols());
}

}  // namespace

double em_log_likelihood(const GaussianMixtureModel& model,
                         const DenseMatrix& features) {
  if (model.dim() != features.cols() || model.variances.cols() != features.cols()) {
    throw std::invalid_argument("em_log_likelihood: dimension mismatch");
  }
  DenseMatrix dens = component_log_densities(model, features);
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) total += log_sum_exp(dens.row(i));
  return total;
}

GmmFit fit_gmm(const DenseMatrix& x, std::uint64_t seed,
               const GmmOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw std::invalid_argument("fit_gmm: need at least 2 rows");

  GmmFit fit;
  if (all_rows_identical(x)) {
    fit.collapsed = true;
    fit.assignment =
        ClusterAssignment::canonical(std::vector<std::size_t>(n, 0), kComponents);
    fit.model.weights = {1.0, 0.0};
    fit.model.means = DenseMatrix(kComponents, d);
    fit.model.variances = DenseMatrix(kComponents, d, 1.0);
    for (std::size_t c = 0; c < kComponents; ++c) {
      for (std::size_t j = 0; j < d; ++j) fit.model.means(c, j) = x(0, j);
    }
    return fit;
  }

  std::vector<double> global_mean(d, 0.0), global_var(d, 0.0), floor(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) global_mean[j] += x(i, j);
  }
  for (double& m : global_mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x(i, j) - global_mean[j];
      global_var[j] += diff * diff;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    global_var[j] /= static_cast<double>(n);
    floor[j] = options.variance_floor_scale * (global_var[j] + 1e-12);
  }

  GaussianMixtureModel& model = fit.model;
  Rng rng(seed);
  model.means = kmeans_plus_plus(x, kComponents, rng);
  model.weights.assign(kComponents, 1.0 / kComponents);
  model.variances = DenseMatrix(kComponents, d);
  for (std::size_t c = 0; c < kComponents; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      model.variances(c, j) = std::max(global_var[j], floor[j]);
    }
  }

  DenseMatrix log_dens = component_log_densities(model, x);
  auto total_ll = [&](const DenseMatrix& dens) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) ll += log_sum_exp(dens.row(i));
    return ll;
  };
  double ll = total_ll(log_dens);
  fit.log_likelihood_trace.push_back(ll);

  DenseMatrix resp(n, kComponents);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    // E-step.
    for (std::size_t i = 0; i < n; ++i) {
      const double norm = log_sum_exp(log_dens.row(i));
      for (std::size_t c = 0; c < kComponents; ++c) {
        resp(i, c) = std::exp(log_dens(i, c) - norm);
      }
    }
    // M-step.
    std::vector<double> mass(kComponents, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kComponents; ++c) mass[c] += resp(i, c);
    }
    if (*std::min_element(mass.begin(), mass.end()) <
        1e-10 * static_cast<double>(n)) {
      fit.collapsed = true;
      break;
    }
    GaussianMixtureModel next;
    next.weights.resize(kComponents);
    next.means = DenseMatrix(kComponents, d);
    next.variances = DenseMatrix(kComponents, d);
    for (std::size_t c = 0; c < kComponents; ++c) {
      next.weights[c] = mass[c] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          next.means(c, j) += resp(i, c) * x(i, j);
        }
      }
      for (std::size_t j = 0; j < d; ++j) next.means(c, j) /= mass[c];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = x(i, j) - next.means(c, j);
          next.variances(c, j) += resp(i, c) * diff * diff;
        }
      }
      for (std::size_t j = 0; j < d; ++j) {
        next.variances(c, j) = std::max(next.variances(c, j) / mass[c], floor[j]);
      }
    }
    // Renormalize so the weights sum to 1 to machine precision.
    const double wsum = next.weights[0] + next.weights[1];
    for (double& w : next.weights) w /= wsum;

    model = std::move(next);
    log_dens = component_log_densities(model, x);
    const double updated = total_ll(log_dens);
    fit.log_likelihood_trace.push_back(updated);
    const double gain = updated - ll;
    ll = updated;
    if (gain < options.tolerance) break;
  }

  fit.assignment = argmax_assignment(log_dens);
  return fit;
}

ClusterAssignment gmm_cluster(const DenseMatrix& features, std::uint64_t seed,
                              const GmmOptions& options) {
  return fit_gmm(features, seed, options).assignment;
}

}  // namespace gshield
