#pragma once

// Live chat-completions transport over cpp-httplib. HTTPS endpoints need the
// including target to define CPPHTTPLIB_OPENSSL_SUPPORT and link OpenSSL.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>

#include "error.hpp"
#include "llm.hpp"

namespace sdgkit {

inline constexpr const char* kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";
inline constexpr const char* kApiKeyEnv = "OPENAI_API_KEY";

/// Reads the API key from the environment; empty when unset.
inline std::string api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  return v ? std::string(v) : std::string();
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("endpoint URL lacks a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw InputError("unsupported endpoint scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint_url, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(60))
      : endpoint_(split_endpoint(endpoint_url)), api_key_(std::move(api_key)), timeout_(timeout) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint_.origin.rfind("https://", 0) == 0)
      throw TransportError(TransportError::Kind::transport_failed, "this build has no TLS support; use an http:// endpoint");
#endif
  }

  HttpResponse post(const std::string& body) override {
    // One client per call keeps the transport safe to share across threads.
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }

 private:
  Endpoint endpoint_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace sdgkit
