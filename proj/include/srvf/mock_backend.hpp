#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "srvf/backend.hpp"

namespace srvf {

// Behavioral stand-in for an LLM's relation bias. A sample whose gold label
// has an entry is answered with the confused label with probability
//   p_eff = p * (1 - steering_strength * I[some demonstration has the gold label]).
struct BiasModel {
  struct Confusion {
    std::string confused;
    double probability = 0.0;
  };
  std::map<std::string, Confusion> confusion;  // keyed by gold label name
  double steering_strength = 0.0;

  // Throws ConfigError on out-of-range probabilities, self-confusion or
  // labels missing from `labels`.
  void validate(const LabelSet& labels) const;
  double effective_probability(const std::string& gold, bool gold_demo_present) const;

  static BiasModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Deterministic response for one RE prompt. The gold label is read from the
// sample (the side channel a real backend never has); randomness is a hash
// of (seed, sample id, demonstration label multiset).
std::string mock_generate(const BiasModel& bias, const PromptSpec& spec, std::uint64_t seed);

// Core of mock_generate, shared with MockBackend.
std::string mock_re_response(const BiasModel& bias, const LabeledSample& sample,
                             std::vector<std::string> demo_labels, std::uint64_t seed);

// Whether the mock would answer with the confused label.
bool mock_confuses(const BiasModel& bias, const LabeledSample& sample,
                   std::vector<std::string> demo_labels, std::uint64_t seed);

// Synthetic rationale texts in the Table-4 explanation style. Unbiased ones
// read the key phrase of the sentence; biased ones lean on the entity pair.
std::string unbiased_rationale_text(const LabeledSample& s, std::string_view label,
                                    std::uint64_t variant);
std::string biased_rationale_text(const LabeledSample& s, std::string_view label,
                                  std::uint64_t variant);

// LlmBackend that reconstructs the request from the prompt text (RE prompts,
// both LGI steps and both document stages) and answers through the BiasModel.
// A pure function of (prompt, ctx.seed) once samples are registered.
class MockBackend : public LlmBackend {
 public:
  MockBackend(LabelSet labels, BiasModel bias);

  // Registers gold labels for the side channel. Not thread-safe; register
  // everything before issuing calls.
  void register_sample(const LabeledSample& s);
  void register_samples(const std::vector<LabeledSample>& samples);
  void register_document(const Document& d);
  void set_relation_labels(LabelSet relations) { relations_ = std::move(relations); }

  Completion generate(std::string_view prompt, const CallContext& ctx) override;

  const BiasModel& bias() const noexcept { return bias_; }

 private:
  std::string answer_re(std::string_view prompt, std::uint64_t seed) const;
  std::string answer_lgi_step1(std::string_view prompt, std::uint64_t seed) const;
  std::string answer_lgi_step2(std::string_view prompt) const;
  std::string answer_pairs(std::string_view prompt) const;
  std::string answer_triplets(std::string_view prompt, std::uint64_t seed) const;
  const LabeledSample* lookup(std::string_view sentence, std::string_view head,
                              std::string_view tail) const;

  LabelSet labels_;
  LabelSet relations_;
  BiasModel bias_;
  std::unordered_map<std::string, LabeledSample> samples_;
  std::unordered_map<std::string, Document> documents_;
};

}  // namespace srvf
