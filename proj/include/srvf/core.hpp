#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace srvf {

struct RelationLabel {
  std::string name;
  bool is_negative = false;

  friend bool operator==(const RelationLabel& a, const RelationLabel& b) {
    return a.name == b.name;
  }
  friend std::strong_ordering operator<=>(const RelationLabel& a,
                                          const RelationLabel& b) {
    return a.name <=> b.name;
  }
};

// Ordered, duplicate-free set of relation types. Order is the order the
// labels are shown to the LLM in the "Relation Type Set" line.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(const std::vector<std::string>& names,
           const std::vector<std::string>& negatives);

  // The ten SemEval-2010 Task 8 directionless types, "Other" negative.
  static LabelSet semeval();

  const std::vector<RelationLabel>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::optional<RelationLabel> find(std::string_view exact) const;
  // Normalized comparison (see text::normalize_label).
  std::optional<RelationLabel> match(std::string_view loose) const;
  // Exact lookup; throws DataError on unknown names.
  const RelationLabel& at(std::string_view exact) const;
  bool contains(std::string_view exact) const { return find(exact).has_value(); }

  std::vector<RelationLabel> negatives() const;
  // First negative label, or the first label when none is negative.
  RelationLabel fallback_negative() const;

  // "{A, B, C}"
  std::string render() const;

 private:
  std::vector<RelationLabel> labels_;
};

struct LabeledSample {
  std::string id;
  std::string sentence;
  std::string head;
  std::string tail;
  RelationLabel gold;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// Checks the sample invariants (non-empty id, entity spans present in the
// whitespace-normalized sentence, gold in `labels`). Throws DataError.
void validate_sample(const LabeledSample& s, const LabelSet& labels,
                     std::size_t line = 0);

enum class RationaleKind { Unbiased, Biased };
enum class RationaleSource { LGI, DI, Inference };

struct Rationale {
  std::string sample_id;
  std::string text;
  RelationLabel predicted;
  RationaleKind kind = RationaleKind::Unbiased;
  RationaleSource source = RationaleSource::LGI;

  friend bool operator==(const Rationale&, const Rationale&) = default;
};

std::string_view to_string(RationaleKind k);
std::string_view to_string(RationaleSource s);
RationaleKind parse_kind(std::string_view s);
RationaleSource parse_source(std::string_view s);

// R_u, R_b and the labeled samples D_l they were collected from.
class RationaleStore {
 public:
  // Adds a sample. Re-adding an identical sample is a no-op; a different
  // sample under an existing id throws DataError.
  void add_sample(const LabeledSample& s);
  // Validates the rationale against its sample and appends it unless the
  // (sample_id, text, predicted) triple is already present. Returns whether
  // it was inserted.
  bool add_rationale(const Rationale& r);

  const std::vector<Rationale>& unbiased() const noexcept { return unbiased_; }
  const std::vector<Rationale>& biased() const noexcept { return biased_; }
  const std::vector<LabeledSample>& samples() const noexcept { return samples_; }
  const LabeledSample* find_sample(std::string_view id) const;
  const LabeledSample& sample(std::string_view id) const;
  // First unbiased rationale for the sample, if one was accepted.
  const Rationale* unbiased_for(std::string_view sample_id) const;

  std::size_t rationale_count() const noexcept {
    return unbiased_.size() + biased_.size();
  }
  bool empty() const noexcept { return samples_.empty() && rationale_count() == 0; }

 private:
  std::vector<Rationale> unbiased_;
  std::vector<Rationale> biased_;
  std::vector<LabeledSample> samples_;
  std::map<std::string, std::size_t, std::less<>> sample_index_;
  std::map<std::string, std::size_t, std::less<>> first_unbiased_;
  std::map<std::tuple<std::string, std::string, std::string>, bool> seen_;
};

// Union of both stores, deduplicated on (sample_id, text, predicted).
RationaleStore store_merge(const RationaleStore& a, const RationaleStore& b);

struct Demonstration {
  LabeledSample sample;
  std::string rationale_text;
  RelationLabel label;
};

// Builds {x_i, r_i^u, y_i}; the label is always the sample's gold.
Demonstration make_demonstration(const LabeledSample& s, std::string rationale_text);

// Demonstrations for every sample in the store that has an unbiased rationale,
// in sample order.
std::vector<Demonstration> demonstration_pool(const RationaleStore& store);

struct Prediction {
  std::string sample_id;
  std::string rationale_text;
  RelationLabel label;
  std::string raw_response;
  std::size_t iterations_used = 0;
  std::size_t llm_calls = 0;
  std::vector<double> p_b_trace;
};

struct Triplet {
  std::string head;
  RelationLabel relation;
  std::string tail;
  std::string explanation;

  // Set semantics ignore the explanation text.
  friend bool operator==(const Triplet& a, const Triplet& b) {
    return a.head == b.head && a.relation == b.relation && a.tail == b.tail;
  }
  friend auto operator<=>(const Triplet& a, const Triplet& b) {
    if (auto c = a.head <=> b.head; c != 0) return c;
    if (auto c = a.relation <=> b.relation; c != 0) return c;
    return a.tail <=> b.tail;
  }
};

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> entities;
  std::vector<Triplet> triplets;
};

// ---- JSONL files ---------------------------------------------------------

std::vector<LabeledSample> load_samples(const std::filesystem::path& path,
                                        const LabelSet& labels);
std::vector<LabeledSample> parse_samples(std::string_view jsonl,
                                         const LabelSet& labels);
void save_samples(const std::filesystem::path& path,
                  const std::vector<LabeledSample>& samples);
std::string format_samples(const std::vector<LabeledSample>& samples);

// Rationale lines reference samples by id; `samples` populates D_l. Lines
// may carry their sample inline as "sample": {sentence, head, tail, label},
// which save_store always writes.
RationaleStore load_store(const std::filesystem::path& path,
                          const std::vector<LabeledSample>& samples,
                          const LabelSet& labels);
void save_store(const std::filesystem::path& path, const RationaleStore& store);

std::vector<Document> load_documents(const std::filesystem::path& path,
                                     const LabelSet& relations);
void save_documents(const std::filesystem::path& path,
                    const std::vector<Document>& docs);

// Writes `content` to `path` through a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace srvf
