#include "gshield/remote.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "gshield/graph_io.hpp"

namespace gshield {

PredictResponse parse_predict_response(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RemoteError(RemoteError::Kind::kMalformedResponse,
                      std::string("upstream response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("label") || !doc.contains("num_classes") ||
      !doc["label"].is_number_integer() || !doc["num_classes"].is_number_integer()) {
    throw RemoteError(RemoteError::Kind::kMalformedResponse,
                      "upstream response must be {\"label\": int, \"num_classes\": int}");
  }
  PredictResponse r{doc["label"].get<int>(), doc["num_classes"].get<int>()};
  if (r.num_classes < 1 || r.label < 0 || r.label >= r.num_classes) {
    throw RemoteError(RemoteError::Kind::kLabelOutOfRange,
                      "upstream label " + std::to_string(r.label) +
                          " outside [0, " + std::to_string(r.num_classes) + ")");
  }
  return r;
}

std::string encode_predict_response(const PredictResponse& r) {
  return nlohmann::json{{"label", r.label}, {"num_classes", r.num_classes}}.dump();
}

RemoteEndpoint RemoteEndpoint::parse(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw std::invalid_argument("endpoint must start with http://: " + std::string(url));
  }
  url.remove_prefix(scheme.size());
  RemoteEndpoint ep;
  auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  if (slash != std::string_view::npos && url.size() > slash + 1) {
    ep.path = std::string(url.substr(slash));
  }
  auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    ep.host = std::string(authority);
  } else {
    ep.host = std::string(authority.substr(0, colon));
    try {
      ep.port = std::stoi(std::string(authority.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in endpoint: " + std::string(url));
    }
  }
  if (ep.host.empty()) throw std::invalid_argument("endpoint host is empty");
  return ep;
}

std::string RemoteEndpoint::url() const {
  return "http://" + host + ":" + std::to_string(port) + path;
}

RemotePredictor::RemotePredictor(RemoteEndpoint endpoint,
                                 std::optional<int> num_classes)
    : endpoint_(std::move(endpoint)), configured_classes_(num_classes) {}

RemotePredictor::~RemotePredictor() = default;

std::unique_ptr<httplib::Client> RemotePredictor::acquire() const {
  {
    std::lock_guard lock(pool_mutex_);
    if (!pool_.empty()) {
      auto c = std::move(pool_.back());
      pool_.pop_back();
      return c;
    }
  }
  auto c = std::make_unique<httplib::Client>(endpoint_.host, endpoint_.port);
  c->set_keep_alive(true);
  c->set_connection_timeout(endpoint_.timeout);
  c->set_read_timeout(endpoint_.timeout);
  c->set_write_timeout(endpoint_.timeout);
  return c;
}

void RemotePredictor::release(std::unique_ptr<httplib::Client> c) const {
  std::lock_guard lock(pool_mutex_);
  pool_.push_back(std::move(c));
}

PredictResponse RemotePredictor::query(const Graph& g) const {
  const std::string body = dump_graph_json(g);
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(endpoint_.backoff_base * (1 << (attempt - 1)));
    }
    attempts_.fetch_add(1);
    auto client = acquire();
    auto res = client->Post(endpoint_.path, body, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;  // drop the client; its connection is unusable
    }
    release(std::move(client));
    if (res->status >= 500) {
      last_error = "upstream status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw RemoteError(RemoteError::Kind::kRejected,
                        "upstream rejected request with status " +
                            std::to_string(res->status) + ": " + res->body);
    }
    PredictResponse r = parse_predict_response(res->body);
    if (configured_classes_ && r.num_classes != *configured_classes_) {
      throw RemoteError(RemoteError::Kind::kMalformedResponse,
                        "upstream reports " + std::to_string(r.num_classes) +
                            " classes, expected " +
                            std::to_string(*configured_classes_));
    }
    observed_classes_.store(r.num_classes);
    return r;
  }
  throw RemoteError(RemoteError::Kind::kRetriesExhausted,
                    endpoint_.url() + ": " + last_error + " after " +
                        std::to_string(endpoint_.max_retries) + " retries");
}

int RemotePredictor::predict(const Graph& g) const { return query(g).label; }

int RemotePredictor::num_classes() const {
  if (configured_classes_) return *configured_classes_;
  int observed = observed_classes_.load();
  if (observed < 0) {
    throw PredictorError("remote predictor class count unknown before first response");
  }
  return observed;
}

int remote_predict(const RemoteEndpoint& endpoint, const Graph& g) {
  return RemotePredictor(endpoint).predict(g);
}

}  // namespace gshield
