#include "gshield/service.hpp"

#include <charconv>
#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "gshield/graph_io.hpp"
#include "gshield/rng.hpp"

namespace gshield {

namespace {

HttpResponse error_response(int status, const std::string& message,
                            const std::string& violation = {}) {
  nlohmann::json doc = {{"error", message}};
  if (!violation.empty()) doc["violation"] = violation;
  return {status, doc.dump()};
}

/// Error category prefix of GraphJsonError messages ("unknown-field: x").
std::string violation_of(const std::string& message) {
  auto colon = message.find(':');
  return colon == std::string::npos ? message : message.substr(0, colon);
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(key + " must be a positive integer, got '" + text + "'");
  }
  if (v < 1) throw std::invalid_argument(key + " must be >= 1");
  return v;
}

double parse_fraction(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument(key + " must be a number, got '" + text + "'");
  }
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(key + " must be in (0, 1]");
  return v;
}

}  // namespace

void ServiceConfig::validate() const {
  if (!upstream) throw std::invalid_argument("service: no upstream predictor");
  if (request_timeout.count() <= 0) throw std::invalid_argument("service: timeout must be > 0");
  if (max_body_bytes < 1024) throw std::invalid_argument("service: body limit must be >= 1 KiB");
  if (max_concurrency < 1) throw std::invalid_argument("service: max_concurrency must be >= 1");
  if (subgraph_count.min < 1 || subgraph_count.min > subgraph_count.max ||
      sample_rate.min > sample_rate.max || feature_fraction.min > feature_fraction.max) {
    throw std::invalid_argument("service: empty override bounds");
  }
  defense.validate();
  if (subgraph_count.clamp(defense.subgraph_count) != defense.subgraph_count ||
      sample_rate.clamp(defense.sample_rate) != defense.sample_rate ||
      feature_fraction.clamp(defense.feature_fraction) != defense.feature_fraction) {
    throw std::invalid_argument("service: configured defense lies outside the override bounds");
  }
}

ShieldService::ShieldService(ServiceConfig cfg, Clock clock)
    : cfg_(std::move(cfg)), clock_(std::move(clock)) {
  cfg_.validate();
}

ShieldService::~ShieldService() { stop(); }

DefenseConfig ShieldService::resolve_overrides(const Params& params) const {
  DefenseConfig c = cfg_.defense;
  for (const auto& [key, value] : params) {
    if (key == "N") {
      c.subgraph_count = cfg_.subgraph_count.clamp(parse_count(key, value));
    } else if (key == "p") {
      c.sample_rate = cfg_.sample_rate.clamp(parse_fraction(key, value));
    } else if (key == "r") {
      c.feature_fraction = cfg_.feature_fraction.clamp(parse_fraction(key, value));
    } else if (key == "strategy") {
      c.strategy = parse_strategy(value);
    } else {
      throw std::invalid_argument("unknown-parameter: " + key);
    }
  }
  return c;
}

HttpResponse ShieldService::predict_uncached(std::string_view body, const Params& params) {
  if (body.size() > cfg_.max_body_bytes) {
    return error_response(413, "request body exceeds " + std::to_string(cfg_.max_body_bytes) +
                                   " bytes");
  }
  for (const auto& [key, value] : params) {
    if (key != "N" && key != "p" && key != "r" && key != "strategy") {
      return error_response(400, "unknown query parameter '" + key + "'", "unknown-field");
    }
  }
  DefenseConfig dc;
  try {
    dc = resolve_overrides(params);
  } catch (const std::invalid_argument& e) {
    return error_response(422, e.what());
  }

  Graph g;
  std::uint64_t seed = fnv1a64(body);
  try {
    const auto doc = nlohmann::json::parse(body);
    g = graph_from_json(doc, {"seed"});
    if (doc.contains("seed")) {
      if (!doc["seed"].is_number_unsigned()) {
        return error_response(400, "seed must be a non-negative integer", "malformed-json");
      }
      seed = doc["seed"].get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("body is not JSON: ") + e.what(), "malformed-json");
  } catch (const GraphError& e) {
    return error_response(400, e.what(), e.violation());
  } catch (const GraphJsonError& e) {
    return error_response(400, e.what(), violation_of(e.what()));
  }
  if (g.node_count() == 0) return error_response(400, "graph has no nodes", "empty-graph");
  dc.seed = seed;

  // The pipeline runs on its own thread so a stalled upstream can be
  // abandoned at the deadline.
  auto upstream = cfg_.upstream;
  auto task = std::make_shared<std::packaged_task<DefenseResult()>>(
      [upstream, graph = std::move(g), dc] { return defend(graph, *upstream, dc); });
  auto result = task->get_future();
  std::thread([task] { (*task)(); }).detach();
  if (result.wait_for(cfg_.request_timeout) != std::future_status::ready) {
    return error_response(504, "defense did not finish within " +
                                   std::to_string(cfg_.request_timeout.count()) + " ms");
  }
  try {
    DefenseResult res = result.get();
    nlohmann::json out = {{"label", res.label},
                          {"votes", res.tally.counts},
                          {"removed_nodes", res.filter.removed.indices()},
                          {"queries", res.query_count}};
    return {200, out.dump()};
  } catch (const DefenseError& e) {
    return error_response(502, e.what());
  } catch (const PredictorError& e) {
    return error_response(502, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse ShieldService::handle_predict(std::string_view body, const Params& params,
                                           const std::optional<std::string>& request_id) {
  if (!request_id) return predict_uncached(body, params);

  // Key on the body too, so a reused id with a different payload is not
  // answered from the cache.
  const std::string key = *request_id + '\n' + std::to_string(fnv1a64(body));
  std::promise<HttpResponse> promise;
  std::shared_future<HttpResponse> pending;
  {
    std::lock_guard lock(cache_mutex_);
    auto it = request_cache_.find(key);
    if (it != request_cache_.end()) {
      pending = it->second;
    } else {
      request_cache_.emplace(key, promise.get_future().share());
      cache_order_.push_back(key);
      while (cache_order_.size() > cfg_.request_cache_capacity) {
        request_cache_.erase(cache_order_.front());
        cache_order_.erase(cache_order_.begin());
      }
    }
  }
  if (pending.valid()) return pending.get();
  HttpResponse r = predict_uncached(body, params);
  promise.set_value(r);
  if (r.status >= 500) {
    // Failures are not remembered, so a retry can succeed.
    std::lock_guard lock(cache_mutex_);
    request_cache_.erase(key);
    std::erase(cache_order_, key);
  }
  return r;
}

HttpResponse ShieldService::handle_health() {
  std::lock_guard lock(health_mutex_);
  const auto now = clock_();
  if (!health_checked_ || now - *health_checked_ >= cfg_.health_ttl) {
    ++health_probes_;
    const Graph ping = Graph::build(1, {}, DenseMatrix(1, cfg_.ping_feature_dim, 0.0));
    try {
      const int label = cfg_.upstream->predict(ping);
      upstream_ok_ = label >= 0;
    } catch (const std::exception&) {
      upstream_ok_ = false;
    }
    health_checked_ = now;
  }
  nlohmann::json out = {{"status", "ok"}, {"upstream", upstream_ok_ ? "ok" : "unreachable"}};
  return {200, out.dump()};
}

int ShieldService::start() {
  if (server_) throw std::logic_error("service already started");
  server_ = std::make_unique<httplib::Server>();
  const std::size_t workers = cfg_.max_concurrency;
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  server_->set_payload_max_length(cfg_.max_body_bytes);

  server_->Post(std::string(kPredictPath), [this](const httplib::Request& req,
                                                 httplib::Response& res) {
    std::optional<std::string> id;
    if (req.has_header("Idempotency-Key")) id = req.get_header_value("Idempotency-Key");
    else if (req.has_header("X-Request-Id")) id = req.get_header_value("X-Request-Id");
    Params params(req.params.begin(), req.params.end());
    HttpResponse r = handle_predict(req.body, params, id);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Get(std::string(kHealthPath), [this](const httplib::Request&, httplib::Response& res) {
    HttpResponse r = handle_health();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"error", "status " + std::to_string(res.status)}}.dump(),
                      "application/json");
    }
  });

  int port = cfg_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(cfg_.host);
  } else if (!server_->bind_to_port(cfg_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw std::runtime_error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void ShieldService::stop() {
  if (!server_) return;
  server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace gshield
