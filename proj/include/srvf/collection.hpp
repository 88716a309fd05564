#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srvf/backend.hpp"
#include "srvf/core.hpp"
#include "srvf/log.hpp"

namespace srvf {

// Label-guided intervention. Step 1 asks for a rationale with the gold label
// revealed; step 2 asks for the label given only that rationale. The rationale
// is accepted iff step 2 derives the gold label; step 1 is retried `retries`
// times with fresh seeds. Returns nullopt when every attempt is rejected.
// Throws the last backend/parse error if no attempt reached step 2.
std::optional<Rationale> induce_unbiased(const LabeledSample& sample, LlmBackend& backend,
                                         const Demonstration& worked_example,
                                         const LabelSet& labels, std::size_t retries,
                                         const CallContext& ctx);

// Picks up to `attempts` demonstrations whose labels differ from `gold`,
// with pairwise-distinct labels while the pool allows.
std::vector<Demonstration> pick_intervention_demos(const std::vector<Demonstration>& pool,
                                                   const RelationLabel& gold,
                                                   std::size_t attempts, std::uint64_t seed);

// Diversified intervention: one RE inference per intervention demonstration;
// responses whose label differs from gold are kept as biased rationales.
// Failed attempts are skipped and reported through `logger`.
std::vector<Rationale> observe_biased(const LabeledSample& sample, LlmBackend& backend,
                                      const std::vector<Demonstration>& pool,
                                      const LabelSet& labels, std::size_t attempts,
                                      const CallContext& ctx, const Logger& logger = {});

struct CollectConfig {
  std::size_t di_attempts = 3;
  std::size_t lgi_retries = 2;
  std::uint64_t seed = 0;
  // Abort when more than this share of samples is rejected by LGI.
  double max_reject_fraction = 0.5;
  Demonstration worked_example = lgi_worked_example_semeval();
};

struct CollectResult {
  RationaleStore store;
  std::vector<std::string> rejected;  // sample ids without an unbiased rationale
  std::vector<std::string> failures;  // "<id>: <error>"
};

// Runs LGI over every sample, then DI with the accepted demonstrations as the
// pool. Samples run concurrently; the store is assembled in input order.
CollectResult collect(const std::vector<LabeledSample>& samples, LlmBackend& backend,
                      const LabelSet& labels, const CollectConfig& cfg,
                      CallLog* log = nullptr, const Logger& logger = {});

}  // namespace srvf
