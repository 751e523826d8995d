#pragma once

#include <memory>
#include <string>

#include "foresight/jsonl.hpp"

namespace foresight {

struct EndpointOptions {
  std::string base_url;  // "http://host:port"
  std::string path = "/v1/annotate";
  std::string model_name;
  std::string auth_token;  // sent as a Bearer token when non-empty
  double timeout_seconds = 30.0;
  int max_retries = 2;     // attempts after the first
  int max_in_flight = 4;   // concurrent requests shared by all copies

  static EndpointOptions from_json(const json& object, std::string default_path);
};

// Synchronous JSON-over-HTTP POST with retries and a shared in-flight bound.
// Copies share the in-flight limit.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(EndpointOptions options);

  // Adds "model" to the body. Throws TransportError once retries are
  // exhausted (connection failure, timeout, non-2xx) and ReplyParseError when
  // a 2xx body is not a JSON object.
  json post(json body) const;

  const EndpointOptions& options() const noexcept { return options_; }

 private:
  struct Gate;
  EndpointOptions options_;
  std::shared_ptr<Gate> gate_;
};

}  // namespace foresight
