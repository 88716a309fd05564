#include "srvf/log.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>

namespace srvf {

Logger Logger::stderr_json() {
  return Logger([](std::string_view level, std::string_view event,
                   const nlohmann::json& fields) {
    static std::mutex mu;
    nlohmann::json line = nlohmann::json::object();
    line["ts"] = std::chrono::duration<double>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
    line["level"] = level;
    line["event"] = event;
    for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
    const std::string s = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::lock_guard lock(mu);
    std::fprintf(stderr, "%s\n", s.c_str());
  });
}

}  // namespace srvf
