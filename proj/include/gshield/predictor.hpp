#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

#include "gshield/graph.hpp"

namespace gshield {

class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Opaque label-valued graph classifier. Implementations must be pure and
/// safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  /// Class index in [0, num_classes()). Throws PredictorError on failure.
  virtual int predict(const Graph& g) const = 0;
  virtual int num_classes() const = 0;
};

/// Delegates to another predictor and counts calls.
class CountingPredictor final : public Predictor {
 public:
  explicit CountingPredictor(const Predictor& inner) : inner_(inner) {}

  int predict(const Graph& g) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.predict(g);
  }
  int num_classes() const override { return inner_.num_classes(); }

  std::size_t count() const { return calls_.load(std::memory_order_relaxed); }
  void reset() { calls_.store(0, std::memory_order_relaxed); }

 private:
  const Predictor& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Always answers the same class.
class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(int label, int num_classes)
      : label_(label), num_classes_(num_classes) {}
  int predict(const Graph&) const override { return label_; }
  int num_classes() const override { return num_classes_; }

 private:
  int label_;
  int num_classes_;
};

}  // namespace gshield
