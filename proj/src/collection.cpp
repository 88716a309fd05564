#include "srvf/collection.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <random>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"

namespace srvf {

std::optional<Rationale> induce_unbiased(const LabeledSample& sample, LlmBackend& backend,
                                         const Demonstration& worked_example,
                                         const LabelSet& labels, std::size_t retries,
                                         const CallContext& ctx) {
  std::exception_ptr last_error;
  bool reached_step2 = false;
  for (std::size_t attempt = 0; attempt <= retries; ++attempt) {
    CallContext c = ctx;
    c.seed = derive_seed(ctx.seed, "lgi", attempt);
    try {
      const std::string raw1 = complete(backend, render_lgi_step1(worked_example, sample), c);
      ParsedResponse step1 = parse_re_response(raw1, labels);
      const std::string raw2 = complete(
          backend, render_lgi_step2(worked_example, sample, step1.rationale_text, labels), c);
      reached_step2 = true;
      const RelationLabel derived = parse_lgi_step2(raw2, labels);
      if (derived == sample.gold) {
        return Rationale{sample.id, step1.rationale_text, sample.gold,
                         RationaleKind::Unbiased, RationaleSource::LGI};
      }
    } catch (const ParseError&) {
      last_error = std::current_exception();
    } catch (const BackendError&) {
      last_error = std::current_exception();
    }
  }
  if (!reached_step2 && last_error) std::rethrow_exception(last_error);
  return std::nullopt;
}

std::vector<Demonstration> pick_intervention_demos(const std::vector<Demonstration>& pool,
                                                   const RelationLabel& gold,
                                                   std::size_t attempts, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!(pool[i].label == gold)) by_label[pool[i].label.name].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::string> label_order;
  for (const auto& [name, _] : by_label) label_order.push_back(name);
  stable_shuffle(label_order.begin(), label_order.end(), rng);
  for (auto& [_, idx] : by_label) stable_shuffle(idx.begin(), idx.end(), rng);

  // Round-robin over shuffled labels: distinct labels first, repeats only
  // once every label has been used.
  std::vector<Demonstration> out;
  for (std::size_t round = 0; out.size() < attempts; ++round) {
    bool any = false;
    for (const auto& name : label_order) {
      const auto& idx = by_label[name];
      if (round >= idx.size()) continue;
      any = true;
      out.push_back(pool[idx[round]]);
      if (out.size() == attempts) break;
    }
    if (!any) break;
  }
  return out;
}

std::vector<Rationale> observe_biased(const LabeledSample& sample, LlmBackend& backend,
                                      const std::vector<Demonstration>& pool,
                                      const LabelSet& labels, std::size_t attempts,
                                      const CallContext& ctx, const Logger& logger) {
  std::vector<Rationale> out;
  const auto demos = pick_intervention_demos(pool, sample.gold, attempts,
                                             derive_seed(ctx.seed, "di-demos"));
  for (std::size_t a = 0; a < demos.size(); ++a) {
    PromptSpec spec;
    spec.demonstrations = {demos[a]};
    spec.inference_sample = sample;
    spec.labels = labels;
    CallContext c = ctx;
    c.seed = derive_seed(ctx.seed, "di", a);
    try {
      Generation g = generate_re(backend, render_re_prompt(spec), labels, c);
      if (g.status == Generation::Status::Fallback) {
        logger.warn("collect.di_unparseable", {{"sample", sample.id}, {"attempt", a}});
        continue;
      }
      if (g.label == sample.gold) continue;
      Rationale r{sample.id, g.rationale_text, g.label, RationaleKind::Biased, RationaleSource::DI};
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
    } catch (const Error& e) {
      logger.warn("collect.di_failed", {{"sample", sample.id}, {"attempt", a}, {"error", e.what()}});
    }
  }
  return out;
}

CollectResult collect(const std::vector<LabeledSample>& samples, LlmBackend& backend,
                      const LabelSet& labels, const CollectConfig& cfg, CallLog* log,
                      const Logger& logger) {
  CollectResult result;
  for (const auto& s : samples) result.store.add_sample(s);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());

  std::vector<std::optional<Rationale>> unbiased(samples.size());
  std::vector<std::string> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    CallContext ctx{derive_seed(cfg.seed, s.id), Phase::PreInference, s.id, log};
    try {
      unbiased[i] = induce_unbiased(s, backend, cfg.worked_example, labels, cfg.lgi_retries, ctx);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (unbiased[i]) {
      result.store.add_rationale(*unbiased[i]);
    } else {
      result.rejected.push_back(samples[i].id);
      if (!errors[i].empty()) result.failures.push_back(samples[i].id + ": " + errors[i]);
    }
  }
  logger.info("collect.lgi_done", {{"samples", samples.size()},
                                   {"accepted", result.store.unbiased().size()},
                                   {"rejected", result.rejected.size()}});
  if (!samples.empty() &&
      static_cast<double>(result.rejected.size()) / static_cast<double>(samples.size()) >
          cfg.max_reject_fraction) {
    throw Error("label-guided intervention rejected " + std::to_string(result.rejected.size()) +
                " of " + std::to_string(samples.size()) + " samples");
  }

  const auto pool = demonstration_pool(result.store);
  std::vector<std::vector<Rationale>> biased(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    CallContext ctx{derive_seed(cfg.seed, s.id), Phase::PreInference, s.id, log};
    biased[i] = observe_biased(s, backend, pool, labels, cfg.di_attempts, ctx, logger);
  }
  for (const auto& rs : biased)
    for (const auto& r : rs) result.store.add_rationale(r);
  logger.info("collect.di_done", {{"biased", result.store.biased().size()}});
  return result;
}

}  // namespace srvf
