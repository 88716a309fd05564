#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srvf/core.hpp"
#include "srvf/error.hpp"

namespace srvf {

inline constexpr std::string_view kReInstruction =
    "Determine the relation between the given head entity and tail entity in "
    "the given sentence. The relation category is from the relation type set.";

inline constexpr std::string_view kStartMarker = "(Start of Instance)";
inline constexpr std::string_view kEndMarker = "(End of Instance)";

// Instruction, Demonstrations, Hint (optional) and Inference, in that order.
struct PromptSpec {
  std::string instruction{kReInstruction};
  std::vector<Demonstration> demonstrations;
  std::string hint;
  LabeledSample inference_sample;
  LabelSet labels;
};

std::string render_re_prompt(const PromptSpec& spec);

// One "(Start of Instance) ... (End of Instance)" block.
std::string render_demonstration_block(const Demonstration& demo,
                                       const LabelSet& labels);

// The Prediction sentence used in demonstrations and mock responses.
std::string prediction_sentence(std::string_view head, std::string_view tail,
                                std::string_view label);

class ParseError : public Error {
 public:
  enum class Kind { Empty, MissingSection, UnknownLabel };
  ParseError(Kind kind, const std::string& what, std::string prediction_line = {},
             std::string rationale = {})
      : Error(what),
        kind_(kind),
        prediction_line_(std::move(prediction_line)),
        rationale_(std::move(rationale)) {}
  Kind kind() const noexcept { return kind_; }
  // Text of the Prediction line when it was found.
  const std::string& prediction_line() const noexcept { return prediction_line_; }
  // Parsed rationale text for UnknownLabel errors.
  const std::string& rationale() const noexcept { return rationale_; }

 private:
  Kind kind_;
  std::string prediction_line_;
  std::string rationale_;
};

struct ParsedResponse {
  std::string rationale_text;
  RelationLabel label;
};

// Splits a "Reasoning Explanations: ... Prediction: ..." response. The label
// is the last double-quoted string on the Prediction line, matched with
// label normalization. Throws ParseError.
ParsedResponse parse_re_response(std::string_view raw, const LabelSet& labels);

// Longest label name occurring case-insensitively in `line`.
std::optional<RelationLabel> find_label_mention(std::string_view line,
                                                const LabelSet& labels);

// ---- label-guided intervention ------------------------------------------------

// The fixed worked example shown in both LGI templates.
Demonstration lgi_worked_example_semeval();

// Step 1: the gold label is stated before the explanation is requested.
std::string render_lgi_step1(const Demonstration& worked, const LabeledSample& sample);
// Step 2: only the rationale is given; the LLM derives the label.
std::string render_lgi_step2(const Demonstration& worked, const LabeledSample& sample,
                             std::string_view rationale, const LabelSet& labels);
// Label derived in a step-2 response (last quoted string before the end
// marker, normalized). Throws ParseError.
RelationLabel parse_lgi_step2(std::string_view raw, const LabelSet& labels);

// ---- document-level two-stage prompts ----------------------------------------

struct EntityPair {
  std::string head;
  std::string tail;
  friend bool operator==(const EntityPair&, const EntityPair&) = default;
};

std::string render_pair_prompt(const Document& demo, const Document& doc,
                               const LabelSet& relations);
std::vector<EntityPair> parse_pairs(std::string_view raw);

std::string render_triplet_prompt(const Document& demo, const Document& doc,
                                  const std::vector<EntityPair>& pairs,
                                  const LabelSet& relations);

struct TripletParse {
  std::vector<Triplet> triplets;
  std::size_t dropped = 0;
};
// Malformed or unknown-relation triplets are dropped and counted.
TripletParse parse_triplets(std::string_view raw, const LabelSet& relations);

std::string format_pair(const EntityPair& p);
std::string format_triplet(const Triplet& t);

}  // namespace srvf
