#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "srvf/core.hpp"
#include "srvf/prompt.hpp"

namespace srvf {

enum class Phase { PreInference, InitialGeneration, Correction };
std::string_view to_string(Phase p);

struct CallRecord {
  Phase phase = Phase::InitialGeneration;
  std::string sample_id;
  bool llm_call = true;  // false for timed non-LLM work (e.g. training)
  bool ok = true;
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  std::int64_t tokens = -1;  // -1 when the backend does not report usage
  double seconds = 0.0;
};

// Append-only, thread-safe record of backend calls and timed phases.
class CallLog {
 public:
  void append(CallRecord r);
  std::vector<CallRecord> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

struct CallContext {
  std::uint64_t seed = 0;
  Phase phase = Phase::InitialGeneration;
  std::string sample_id;
  CallLog* log = nullptr;
};

struct Completion {
  std::string text;
  std::int64_t tokens = -1;
};

// A text-in/text-out LLM. Implementations must tolerate concurrent calls.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual Completion generate(std::string_view prompt, const CallContext& ctx) = 0;
};

// Calls the backend, timing the call and appending it to ctx.log.
std::string complete(LlmBackend& backend, std::string_view prompt, const CallContext& ctx);

struct Generation {
  enum class Status { Parsed, LabelRecovered, Fallback };
  std::string rationale_text;
  RelationLabel label;
  std::string raw;
  std::size_t calls = 0;
  Status status = Status::Parsed;
};

inline constexpr std::string_view kUnparseableRationale = "unparseable response";

// Generates and parses one RE response under the parse-retry policy:
// Empty/MissingSection regenerate once; an unknown label falls back to the
// longest label name mentioned on the Prediction line; anything still
// unresolved yields the fallback negative label with a synthetic rationale.
// Backend errors propagate.
Generation generate_re(LlmBackend& backend, std::string_view prompt,
                       const LabelSet& labels, const CallContext& ctx);

}  // namespace srvf
