#include "srvf/backend.hpp"

#include <chrono>

#include "srvf/hash.hpp"

namespace srvf {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::PreInference: return "pre_inference";
    case Phase::InitialGeneration: return "initial_generation";
    case Phase::Correction: return "correction";
  }
  return "initial_generation";
}

void CallLog::append(CallRecord r) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(r));
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string complete(LlmBackend& backend, std::string_view prompt, const CallContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CallRecord rec;
  rec.phase = ctx.phase;
  rec.sample_id = ctx.sample_id;
  rec.prompt_chars = prompt.size();
  try {
    Completion c = backend.generate(prompt, ctx);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.response_chars = c.text.size();
    rec.tokens = c.tokens;
    if (ctx.log) ctx.log->append(rec);
    return std::move(c.text);
  } catch (...) {
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.ok = false;
    if (ctx.log) ctx.log->append(rec);
    throw;
  }
}

Generation generate_re(LlmBackend& backend, std::string_view prompt,
                       const LabelSet& labels, const CallContext& ctx) {
  Generation g;
  CallContext attempt = ctx;
  std::string pred_line;
  for (int round = 0; round < 2; ++round) {
    if (round == 1) attempt.seed = derive_seed(ctx.seed, "reparse");
    g.raw = complete(backend, prompt, attempt);
    ++g.calls;
    try {
      auto parsed = parse_re_response(g.raw, labels);
      g.rationale_text = std::move(parsed.rationale_text);
      g.label = std::move(parsed.label);
      g.status = Generation::Status::Parsed;
      return g;
    } catch (const ParseError& e) {
      if (e.kind() == ParseError::Kind::UnknownLabel) {
        if (auto l = find_label_mention(e.prediction_line(), labels)) {
          g.rationale_text = e.rationale();
          g.label = *l;
          g.status = Generation::Status::LabelRecovered;
          return g;
        }
        break;
      }
    }
  }
  g.rationale_text = std::string(kUnparseableRationale);
  g.label = labels.fallback_negative();
  g.status = Generation::Status::Fallback;
  return g;
}

}  // namespace srvf
