#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gshield/graph.hpp"
#include "gshield/predictor.hpp"

namespace httplib {
class Client;
}

namespace gshield {

// Wire protocol for upstream models:
//   POST /v1/model/predict   body: native graph JSON
//   200 {"label": int, "num_classes": int}

inline constexpr std::string_view kModelPredictPath = "/v1/model/predict";

struct PredictResponse {
  int label = 0;
  int num_classes = 0;
};

class RemoteError : public PredictorError {
 public:
  enum class Kind {
    /// Response body is not {"label": int, "num_classes": int}.
    kMalformedResponse,
    /// label outside [0, num_classes).
    kLabelOutOfRange,
    /// Non-retryable HTTP status (4xx).
    kRejected,
    /// Connection failures or 5xx on every attempt.
    kRetriesExhausted,
  };
  RemoteError(Kind kind, const std::string& what)
      : PredictorError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws RemoteError (kMalformedResponse / kLabelOutOfRange).
PredictResponse parse_predict_response(std::string_view body);
std::string encode_predict_response(const PredictResponse& r);

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 80;
  std::string path{kModelPredictPath};
  std::chrono::milliseconds timeout{5000};
  /// Retries after the first attempt.
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{100};

  /// Accepts "http://host:port" with an optional path.
  static RemoteEndpoint parse(std::string_view url);
  std::string url() const;
};

/// Client for an upstream model. Transient failures (connection errors and
/// 5xx) are retried with exponential backoff base, 2*base, 4*base.
class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(RemoteEndpoint endpoint,
                           std::optional<int> num_classes = std::nullopt);
  ~RemotePredictor() override;

  int predict(const Graph& g) const override;
  /// Configured class count, else the one reported by the last response.
  /// Throws PredictorError before the first response when unconfigured.
  int num_classes() const override;

  PredictResponse query(const Graph& g) const;
  std::size_t attempts() const { return attempts_.load(); }
  const RemoteEndpoint& endpoint() const { return endpoint_; }

 private:
  std::unique_ptr<httplib::Client> acquire() const;
  void release(std::unique_ptr<httplib::Client> c) const;

  RemoteEndpoint endpoint_;
  std::optional<int> configured_classes_;
  mutable std::atomic<int> observed_classes_{-1};
  mutable std::atomic<std::size_t> attempts_{0};
  mutable std::mutex pool_mutex_;
  mutable std::vector<std::unique_ptr<httplib::Client>> pool_;
};

int remote_predict(const RemoteEndpoint& endpoint, const Graph& g);

}  // namespace gshield
