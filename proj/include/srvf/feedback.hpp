#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "srvf/backend.hpp"
#include "srvf/core.hpp"
#include "srvf/log.hpp"
#include "srvf/supervisor.hpp"

namespace srvf {

// Rationales of one predicted label with their embeddings (row-major).
struct AnchorSet {
  std::vector<Rationale> rationales;
  std::vector<double> embeddings;  // rationales.size() x dim
  std::size_t size() const noexcept { return rationales.size(); }
};

// Anchors for verification and retrieval, grouped by predicted label. The
// embeddings come from the supervisor passed to build().
class AnchorIndex {
 public:
  static AnchorIndex build(const SupervisorModel& model, const RationaleStore& store);

  // S_b(y) / S_u(y); empty when y has no anchors of that kind.
  const AnchorSet& biased(const RelationLabel& y) const;
  const AnchorSet& unbiased(const RelationLabel& y) const;
  // Whether any anchor predicts y.
  bool in_universe(const RelationLabel& y) const;
  const RationaleStore& store() const noexcept { return store_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, AnchorSet> biased_;
  std::map<std::string, AnchorSet> unbiased_;
  RationaleStore store_;
  AnchorSet empty_;
};

enum class Verdict { Unbiased, Biased };

struct Verification {
  double p_b = 0.0;
  Verdict verdict = Verdict::Unbiased;
};

// p_b = max sim to S_b(y) - max sim to S_u(y); Biased iff p_b > 0. Edge
// rules: y outside the universe -> +inf, Biased; S_b(y) empty -> -inf,
// Unbiased; S_u(y) empty -> +inf, Biased.
Verification verify(const SupervisorModel& model, const AnchorIndex& index, std::string_view r,
                    const RelationLabel& y);
// Same, for an already embedded rationale.
Verification verify_embedded(const AnchorIndex& index, std::span<const double> e,
                             const RelationLabel& y);

class NoAnchors : public Error {
 public:
  using Error::Error;
};

struct LoopConfig {
  enum class Fallback { LastPrediction, MinPbPrediction };
  std::size_t max_iters = 5;
  std::size_t k = 5;
  std::size_t feedback_demo_count = 5;
  Fallback fallback = Fallback::MinPbPrediction;
  void validate() const;
};

// Positions of the k largest values, ranked by value descending, ties by
// ascending position.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

// D_fb: the source samples of the k biased anchors for y most similar to r,
// each with its gold label and unbiased rationale, deduplicated by sample and
// truncated to cfg.feedback_demo_count. Anchors whose sample has no unbiased
// rationale are skipped. Throws NoAnchors when S_b(y) is empty.
std::vector<Demonstration> retrieve_feedback(const SupervisorModel& model,
                                             const AnchorIndex& index, std::string_view r,
                                             const RelationLabel& y, const LoopConfig& cfg);
std::vector<Demonstration> retrieve_feedback_embedded(const AnchorIndex& index,
                                                      std::span<const double> e,
                                                      const RelationLabel& y,
                                                      const LoopConfig& cfg);

// Verify -> feedback -> correct for one sample. Iteration 0 prompts with
// `initial_demos`; each correction prompts with D_fb retrieved for the latest
// biased iterate. Stops at the first Unbiased verdict, after cfg.max_iters
// corrections, or when a correction would repeat the previous demonstrations
// for an unchanged label; the last two return per cfg.fallback. Backend
// errors are logged and use up their iteration.
Prediction predict_with_feedback(const LabeledSample& sample, LlmBackend& backend,
                                 const SupervisorModel& model, const AnchorIndex& index,
                                 const std::vector<Demonstration>& initial_demos,
                                 const LabelSet& labels, const LoopConfig& cfg,
                                 const CallContext& ctx, const Logger& logger = {});

// Plain ICL: the iteration-0 generation of predict_with_feedback.
Prediction predict_icl(const LabeledSample& sample, LlmBackend& backend,
                       const std::vector<Demonstration>& demos, const LabelSet& labels,
                       const CallContext& ctx, const Logger& logger = {});

// Modal label; ties go to the label whose first occurrence is earliest.
// Throws Error on an empty sequence.
RelationLabel majority_vote(const std::vector<RelationLabel>& candidates);

// n generations with seeds derived from ctx.seed; unparseable generations do
// not vote. Returns the fallback negative when none parses.
Prediction self_consistency(LlmBackend& backend, const PromptSpec& spec, std::size_t n,
                            const CallContext& ctx, const Logger& logger = {});

// ---- initial demonstrations -------------------------------------------------------

enum class InitDemoStrategy { Random, SimcseLike, File };
std::string_view to_string(InitDemoStrategy s);
InitDemoStrategy parse_init_demo_strategy(std::string_view s);

// Chooses D_icl for a test sample from the demonstration pool: a seeded random
// subset, the pool entries whose sentences embed closest to the test
// sentence, or a fixed per-sample list of pool ids.
class DemoSelector {
 public:
  DemoSelector(std::vector<Demonstration> pool, std::size_t count, InitDemoStrategy strategy,
               const SupervisorModel* model = nullptr,
               std::map<std::string, std::vector<std::string>> fixed = {});
  std::vector<Demonstration> select(const LabeledSample& sample, std::uint64_t seed) const;
  const std::vector<Demonstration>& pool() const noexcept { return pool_; }

 private:
  std::vector<Demonstration> pool_;
  std::size_t count_;
  InitDemoStrategy strategy_;
  const SupervisorModel* model_;
  std::map<std::string, std::vector<std::string>> fixed_;
  std::vector<double> pool_embeddings_;
};

// JSON object {sample_id: [pool sample ids...]}.
std::map<std::string, std::vector<std::string>> load_demo_file(const std::filesystem::path& path);

// Runs a method over the test set with per-sample seeds derived from `seed`.
// Samples run concurrently; predictions are returned in input order.
std::vector<Prediction> run_icl(const std::vector<LabeledSample>& test, LlmBackend& backend,
                                const DemoSelector& selector, const LabelSet& labels,
                                std::uint64_t seed, CallLog* log = nullptr,
                                const Logger& logger = {});
std::vector<Prediction> run_srvf(const std::vector<LabeledSample>& test, LlmBackend& backend,
                                 const SupervisorModel& model, const AnchorIndex& index,
                                 const DemoSelector& selector, const LabelSet& labels,
                                 const LoopConfig& cfg, std::uint64_t seed,
                                 CallLog* log = nullptr, const Logger& logger = {});
std::vector<Prediction> run_self_consistency(const std::vector<LabeledSample>& test,
                                             LlmBackend& backend, const DemoSelector& selector,
                                             const LabelSet& labels, std::size_t n,
                                             std::uint64_t seed, CallLog* log = nullptr,
                                             const Logger& logger = {});

// JSONL {id, label, rationale, p_b_trace, iterations_used, llm_calls}.
// Infinite p_b values are written as the strings "inf" / "-inf".
std::string format_predictions(const std::vector<Prediction>& preds);
void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds);
std::vector<Prediction> load_predictions(const std::filesystem::path& path, const LabelSet& labels);

// ---- documents ------------------------------------------------------------------------

struct DocumentPrediction {
  std::vector<Triplet> triplets;  // T_unbiased, sorted
  std::size_t rounds = 0;         // generation rounds performed
  std::size_t llm_calls = 0;
  std::size_t dropped = 0;        // unparseable triplet lines
};

// Retain/discard loop over two-stage document prompting. Each round predicts
// pairs then triplets with demonstration document `demos[d]`; unbiased
// triplets join the output set, biased ones pick the next demonstration (the
// pool document sharing the most relation labels with them, first on ties).
// Stops early once a round has no biased triplet; an empty entity set yields
// an empty result without any call.
DocumentPrediction predict_document(const Document& doc, LlmBackend& backend,
                                    const SupervisorModel& model, const AnchorIndex& index,
                                    const std::vector<Document>& demos, std::size_t initial_demo,
                                    const LabelSet& relations, const LoopConfig& cfg,
                                    const CallContext& ctx, const Logger& logger = {});

// Index of the pool document sharing the most relation labels with `biased`.
std::size_t select_document_demo(const std::vector<Document>& demos,
                                 const std::vector<Triplet>& biased);

}  // namespace srvf
