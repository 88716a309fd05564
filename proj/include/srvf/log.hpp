#pragma once

#include <functional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace srvf {

// Structured event sink. Library code reports warnings and progress through
// a Logger it is handed; the default instance drops everything.
class Logger {
 public:
  using Sink = std::function<void(std::string_view level, std::string_view event,
                                  const nlohmann::json& fields)>;

  Logger() = default;
  explicit Logger(Sink sink) : sink_(std::move(sink)) {}

  // Line-delimited JSON on stderr.
  static Logger stderr_json();

  void info(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) const {
    if (sink_) sink_("info", event, fields);
  }
  void warn(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) const {
    if (sink_) sink_("warn", event, fields);
  }

  void error(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) const {
    if (sink_) sink_("error", event, fields);
  }

 private:
  Sink sink_;
};

}  // namespace srvf
