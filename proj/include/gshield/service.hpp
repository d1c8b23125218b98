#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gshield/defense.hpp"
#include "gshield/predictor.hpp"

namespace httplib {
class Server;
}

namespace gshield {

inline constexpr std::string_view kPredictPath = "/v1/predict";
inline constexpr std::string_view kHealthPath = "/v1/health";

/// Inclusive range a per-request override is clamped into.
template <typename T>
struct Bounds {
  T min;
  T max;
  T clamp(T v) const { return v < min ? min : (v > max ? max : v); }
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  std::shared_ptr<const Predictor> upstream;
  /// Human-readable upstream name for logs.
  std::string upstream_name = "builtin";
  DefenseConfig defense;
  /// N >= 2 keeps T/TF subgraphs strictly smaller than the input.
  Bounds<std::size_t> subgraph_count{2, 50};
  /// p <= 0.5 keeps R subgraphs strictly smaller than the input.
  Bounds<double> sample_rate{0.05, 0.5};
  Bounds<double> feature_fraction{0.1, 1.0};
  std::chrono::milliseconds request_timeout{30000};
  std::size_t max_body_bytes = 1 << 20;
  std::size_t max_concurrency = 8;
  std::chrono::seconds health_ttl{10};
  /// Feature width of the 1-node graph used to probe the upstream.
  std::size_t ping_feature_dim = 1;
  /// Completed responses remembered per request id.
  std::size_t request_cache_capacity = 1024;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

class ShieldService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Params = std::multimap<std::string, std::string>;

  explicit ShieldService(ServiceConfig cfg, Clock clock = &std::chrono::steady_clock::now);
  ~ShieldService();
  ShieldService(const ShieldService&) = delete;
  ShieldService& operator=(const ShieldService&) = delete;

  /// POST /v1/predict. A repeated request_id returns the first response
  /// without querying the upstream again.
  HttpResponse handle_predict(std::string_view body, const Params& params = {},
                              const std::optional<std::string>& request_id = std::nullopt);
  /// GET /v1/health.
  HttpResponse handle_health();

  /// Effective defense configuration for a request, before seeding. Throws
  /// std::invalid_argument for unknown or out-of-domain parameters.
  DefenseConfig resolve_overrides(const Params& params) const;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();

  std::size_t health_probes() const { return health_probes_; }
  const ServiceConfig& config() const { return cfg_; }

 private:
  HttpResponse predict_uncached(std::string_view body, const Params& params);

  ServiceConfig cfg_;
  Clock clock_;

  std::mutex health_mutex_;
  std::optional<std::chrono::steady_clock::time_point> health_checked_;
  bool upstream_ok_ = false;
  std::size_t health_probes_ = 0;

  std::mutex cache_mutex_;
  std::map<std::string, std::shared_future<HttpResponse>> request_cache_;
  std::vector<std::string> cache_order_;

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

}  // namespace gshield
