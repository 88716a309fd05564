#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "srvf/backend.hpp"

namespace srvf {

struct HttpConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model = "gpt-3.5-turbo-0613";
  double temperature = 1.0;
  int max_tokens = 512;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{60};
  int max_inflight = 4;
  std::string api_key;  // empty: read SRVF_API_KEY
};

// OpenAI-compatible chat completions client:
//   POST {base_url}/chat/completions
//   {model, messages: [{role, content}], temperature, max_tokens}
// reading choices[0].message.content. Transport failures and 429/5xx are
// retried with exponential backoff; other statuses fail immediately.
class HttpBackend : public LlmBackend {
 public:
  // Throws ConfigError when the endpoint or credential is missing.
  explicit HttpBackend(HttpConfig cfg);
  ~HttpBackend() override;

  Completion generate(std::string_view prompt, const CallContext& ctx) override;

  // Request body for a prompt; exposed for wire-format tests.
  std::string request_body(std::string_view prompt) const;
  // Extracts the first candidate's text. Throws BackendError.
  static Completion parse_body(std::string_view body);

 private:
  HttpConfig cfg_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::unique_ptr<std::counting_semaphore<1024>> inflight_;
};

}  // namespace srvf
