#include "gshield/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace gshield {

std::vector<double> graph_readout(const Graph& g) {
  const std::size_t d = g.feature_dim();
  const std::size_t n = g.node_count();
  std::vector<double> out(2 * d + 4, 0.0);
  if (n == 0) return out;
  for (std::size_t j = 0; j < d; ++j) out[d + j] = g.feature_row(0)[j];
  double degree_sum = 0.0;
  double degree_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = g.feature_row(i);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] += row[j];
      out[d + j] = std::max(out[d + j], row[j]);
    }
    const auto deg = static_cast<double>(g.degree(i));
    degree_sum += deg;
    degree_max = std::max(degree_max, deg);
  }
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
  out[2 * d] = degree_sum / static_cast<double>(n);
  out[2 * d + 1] = degree_max;
  out[2 * d + 2] = static_cast<double>(n);
  out[2 * d + 3] = edge_density(g);
  return out;
}

ReadoutClassifier::ReadoutClassifier(std::size_t feature_dim,
                                     DenseMatrix weights,
                                     std::vector<double> bias,
                                     std::vector<double> input_mean,
                                     std::vector<double> input_scale)
    : feature_dim_(feature_dim),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      input_mean_(std::move(input_mean)),
      input_scale_(std::move(input_scale)) {
  const std::size_t m = 2 * feature_dim_ + 4;
  if (weights_.rows() != bias_.size() || weights_.cols() != m ||
      input_mean_.size() != m || input_scale_.size() != m) {
    throw std::invalid_argument("ReadoutClassifier: inconsistent shapes");
  }
  if (bias_.size() < 2) {
    throw std::invalid_argument("ReadoutClassifier: need >= 2 classes");
  }
  for (double x : weights_.data()) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite weight");
  }
}

std::vector<double> ReadoutClassifier::logits(const Graph& g) const {
  if (g.feature_dim() != feature_dim_) {
    throw PredictorError("readout classifier expects feature dimension " +
                         std::to_string(feature_dim_) + ", got " +
                         std::to_string(g.feature_dim()));
  }
  std::vector<double> x = graph_readout(g);
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = (x[j] - input_mean_[j]) / input_scale_[j];
  }
  std::vector<double> z = multiply(weights_, x);
  for (std::size_t c = 0; c < z.size(); ++c) z[c] += bias_[c];
  return z;
}

int ReadoutClassifier::predict(const Graph& g) const {
  if (g.node_count() == 0) throw PredictorError("empty graph");
  auto z = logits(g);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

nlohmann::json ReadoutClassifier::to_json() const {
  return {{"kind", "readout-logistic"},
          {"feature_dim", feature_dim_},
          {"weights", weights_.to_rows()},
          {"bias", bias_},
          {"input_mean", input_mean_},
          {"input_scale", input_scale_},
          {"training_accuracy", training_accuracy_}};
}

ReadoutClassifier ReadoutClassifier::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "readout-logistic") {
      throw std::invalid_argument("unsupported model kind");
    }
    ReadoutClassifier model(
        doc.at("feature_dim").get<std::size_t>(),
        DenseMatrix::from_rows(doc.at("weights").get<std::vector<std::vector<double>>>()),
        doc.at("bias").get<std::vector<double>>(),
        doc.at("input_mean").get<std::vector<double>>(),
        doc.at("input_scale").get<std::vector<double>>());
    model.training_accuracy_ = doc.value("training_accuracy", 0.0);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
}

void ReadoutClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

ReadoutClassifier ReadoutClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
  return from_json(doc);
}

ReadoutClassifier train_readout(const std::vector<Graph>& train,
                                const ReadoutTrainingOptions& options,
                                std::uint64_t /*seed*/) {
  if (train.empty()) throw std::invalid_argument("train_readout: no graphs");
  const std::size_t d = train.front().feature_dim();
  std::set<int> classes;
  for (const auto& g : train) {
    if (!g.label()) throw std::invalid_argument("train_readout: unlabeled graph");
    if (g.feature_dim() != d) {
      throw std::invalid_argument("train_readout: mixed feature dimensions");
    }
    classes.insert(*g.label());
  }
  if (classes.size() < 2) {
    throw std::invalid_argument("train_readout: single-class training set");
  }
  const std::size_t num_classes = static_cast<std::size_t>(*classes.rbegin()) + 1;
  const std::size_t n = train.size();
  const std::size_t m = 2 * d + 4;

  DenseMatrix x(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = graph_readout(train[i]);
    std::copy(r.begin(), r.end(), x.row(i).begin());
  }
  std::vector<double> mean(m, 0.0), scale(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += x(i, j);
  }
  for (double& v : mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double diff = x(i, j) - mean[j];
      scale[j] += diff * diff;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) x(i, j) = (x(i, j) - mean[j]) / scale[j];
  }

  DenseMatrix w(num_classes, m, 0.0);
  std::vector<double> b(num_classes, 0.0);
  std::vector<double> prob(num_classes);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    DenseMatrix grad_w(num_classes, m, 0.0);
    std::vector<double> grad_b(num_classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = x.row(i);
      double hi = -1e300;
      for (std::size_t c = 0; c < num_classes; ++c) {
        prob[c] = dot(w.row(c), xi) + b[c];
        hi = std::max(hi, prob[c]);
      }
      double z = 0.0;
      for (double& p : prob) {
        p = std::exp(p - hi);
        z += p;
      }
      const auto y = static_cast<std::size_t>(*train[i].label());
      for (std::size_t c = 0; c < num_classes; ++c) {
        const double err = prob[c] / z - (c == y ? 1.0 : 0.0);
        grad_b[c] += err;
        auto gw = grad_w.row(c);
        for (std::size_t j = 0; j < m; ++j) gw[j] += err * xi[j];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t j = 0; j < m; ++j) {
        w(c, j) -= options.learning_rate * (grad_w(c, j) * inv_n + options.l2 * w(c, j));
      }
      b[c] -= options.learning_rate * grad_b[c] * inv_n;
    }
  }

  ReadoutClassifier model(d, std::move(w), std::move(b), std::move(mean),
                          std::move(scale));
  std::size_t correct = 0;
  for (const auto& g : train) correct += model.predict(g) == *g.label();
  model.set_training_accuracy(static_cast<double>(correct) / static_cast<double>(n));
  return model;
}

}  // namespace gshield
