#include "srvf/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "srvf/error.hpp"

namespace srvf {

namespace {

// Splits "scheme://host[:port][/prefix]".
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must start with http:// or https://");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("https endpoints need a build with OpenSSL");
#endif
  auto path_begin = url.find('/', scheme_end + 3);
  std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
  std::string prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (origin.size() <= scheme_end + 3) throw ConfigError("endpoint has no host");
  return {origin, prefix};
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw ConfigError("http backend needs --endpoint");
  if (cfg_.api_key.empty()) {
    const char* key = std::getenv("SRVF_API_KEY");
    if (!key || !*key) throw ConfigError("SRVF_API_KEY is not set");
    cfg_.api_key = key;
  }
  if (cfg_.max_inflight < 1 || cfg_.max_inflight > 1024)
    throw ConfigError("max_inflight must lie in [1, 1024]");
  std::tie(scheme_host_port_, path_prefix_) = split_url(cfg_.base_url);
  inflight_ = std::make_unique<std::counting_semaphore<1024>>(cfg_.max_inflight);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(std::string_view prompt) const {
  nlohmann::json body = {
      {"model", cfg_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
      {"max_tokens", cfg_.max_tokens}};
  return body.dump();
}

Completion HttpBackend::parse_body(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(std::string("malformed response body: ") + e.what());
  }
  try {
    Completion c;
    c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto u = j.find("usage"); u != j.end() && u->contains("total_tokens"))
      c.tokens = u->at("total_tokens").get<std::int64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected response shape: ") + e.what());
  }
}

Completion HttpBackend::generate(std::string_view prompt, const CallContext&) {
  inflight_->acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{*inflight_};

  const std::string body = request_body(prompt);
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Headers headers = {{"Authorization", "Bearer " + cfg_.api_key}};
  std::string last_error;
  auto delay = cfg_.backoff;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw BackendError("status " + std::to_string(res->status) + ": " + res->body);
    return parse_body(res->body);
  }
  throw BackendError(last_error + " after " + std::to_string(cfg_.max_retries + 1) + " attempts");
}

}  // namespace srvf
