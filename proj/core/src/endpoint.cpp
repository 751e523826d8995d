#include "foresight/endpoint.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "foresight/errors.hpp"

namespace foresight {

struct JsonEndpoint::Gate {
  explicit Gate(int limit) : available(limit) {}

  void acquire() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(mutex);
      ++available;
    }
    cv.notify_one();
  }

  std::mutex mutex;
  std::condition_variable cv;
  int available;
};

EndpointOptions EndpointOptions::from_json(const json& object, std::string default_path) {
  EndpointOptions o;
  o.path = std::move(default_path);
  try {
    o.base_url = object.at("base_url").get<std::string>();
    o.path = object.value("path", o.path);
    o.model_name = object.value("model", std::string{});
    o.timeout_seconds = object.value("timeout_s", o.timeout_seconds);
    o.max_retries = object.value("max_retries", o.max_retries);
    o.max_in_flight = object.value("max_in_flight", o.max_in_flight);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("endpoint config: ") + e.what());
  }
  return o;
}

JsonEndpoint::JsonEndpoint(EndpointOptions options)
    : options_(std::move(options)), gate_(std::make_shared<Gate>(options_.max_in_flight)) {
  if (options_.base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (options_.timeout_seconds <= 0) throw ConfigError("endpoint timeout must be positive");
  if (options_.max_retries < 0) throw ConfigError("endpoint max_retries must be >= 0");
  if (options_.max_in_flight < 1) throw ConfigError("endpoint max_in_flight must be >= 1");
}

json JsonEndpoint::post(json body) const {
  body["model"] = options_.model_name;
  const std::string payload = body.dump();

  httplib::Client client(options_.base_url);
  const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  httplib::Headers headers;
  if (!options_.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + options_.auth_token);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    gate_->acquire();
    auto result = client.Post(options_.path, headers, payload, "application/json");
    gate_->release();
    if (!result) {
      last_error = httplib::to_string(result.error());
    } else if (result->status < 200 || result->status >= 300) {
      last_error = "HTTP " + std::to_string(result->status);
    } else {
      json reply;
      try {
        reply = json::parse(result->body);
      } catch (const json::parse_error&) {
        throw ReplyParseError("endpoint reply is not JSON");
      }
      if (!reply.is_object()) throw ReplyParseError("endpoint reply is not a JSON object");
      return reply;
    }
    spdlog::debug("endpoint {}{} attempt {} failed: {}", options_.base_url, options_.path,
                  attempt + 1, last_error);
  }
  throw TransportError(options_.base_url + options_.path + ": " + last_error + " after " +
                       std::to_string(options_.max_retries + 1) + " attempt(s)");
}

}  // namespace foresight
