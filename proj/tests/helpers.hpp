#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "srvf/backend.hpp"
#include "srvf/core.hpp"

namespace srvf::testing {

inline LabeledSample sample(std::string id, std::string sentence, std::string head,
                            std::string tail, std::string gold) {
  return {std::move(id), std::move(sentence), std::move(head), std::move(tail),
          LabelSet::semeval().at(gold)};
}

inline RelationLabel label(const std::string& name) { return LabelSet::semeval().at(name); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("srvf-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Backend answering from a callback; records every prompt.
class ScriptedBackend : public LlmBackend {
 public:
  using Fn = std::function<std::string(std::string_view prompt, const CallContext& ctx, std::size_t call)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}
  Completion generate(std::string_view prompt, const CallContext& ctx) override {
    std::size_t n;
    {
      std::lock_guard lock(mu_);
      n = prompts_.size();
      prompts_.emplace_back(prompt);
    }
    return {fn_(prompt, ctx, n), -1};
  }
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
  }

 private:
  Fn fn_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

}  // namespace srvf::testing
