#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srvf/backend.hpp"
#include "srvf/core.hpp"
#include "srvf/log.hpp"

namespace srvf {

using GoldPred = std::pair<RelationLabel, RelationLabel>;

struct F1Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// Negative labels mark the absence of a relation. A negative gold with a
// non-negative prediction is a false positive only.
F1Counts count_f1(const std::vector<GoldPred>& preds, const std::vector<RelationLabel>& negatives);
double micro_f1(const std::vector<GoldPred>& preds, const std::vector<RelationLabel>& negatives);

// Pairs predictions with gold samples by id. Throws DataError on a missing id.
std::vector<GoldPred> align(const std::vector<LabeledSample>& gold,
                            const std::vector<Prediction>& preds);

// min(k, available) samples per gold label, drawn without replacement,
// ordered by label then draw order. Shortfalls are logged.
std::vector<LabeledSample> sample_kshot_sentence(const std::vector<LabeledSample>& data,
                                                 std::size_t k, std::uint64_t seed,
                                                 const Logger& logger = {});

struct KshotDocuments {
  std::vector<Document> docs;
  double q = 0.0;              // kept triplets / |R|
  bool exhausted = false;      // corpus ran out before q > k
  std::size_t draws = 0;
};

// Greedy document sampling: draw documents in random order without
// replacement, keep a document iff it has a triplet of a relation whose kept
// triplet count is still below k, and stop once q > k. `relation_count` is
// |R|, the number of relation types a triplet can carry (negatives excluded).
KshotDocuments sample_kshot_document(const std::vector<Document>& docs, std::size_t k,
                                     std::size_t relation_count, std::uint64_t seed,
                                     const Logger& logger = {});

// Misclassification counts keyed by (gold, predicted); the diagonal is never
// recorded.
class ErrorMatrix {
 public:
  struct Cell {
    std::string gold;
    std::string predicted;
    std::size_t count = 0;
  };

  void add(const RelationLabel& gold, const RelationLabel& predicted);
  std::size_t at(std::string_view gold, std::string_view predicted) const;
  std::size_t total() const;
  std::size_t row_sum(std::string_view gold) const;
  // Non-zero cells by count descending, then (gold, predicted).
  std::vector<Cell> worst(std::size_t n = SIZE_MAX) const;
  // Square matrix over `labels` with a header row and column.
  std::string to_csv(const LabelSet& labels) const;
  nlohmann::json to_json() const;

 private:
  std::map<std::pair<std::string, std::string>, std::size_t> cells_;
};

ErrorMatrix error_matrix(const std::vector<GoldPred>& preds);

struct EfficiencyReport {
  double pre_inference_seconds = 0.0;
  double initial_generation_seconds = 0.0;
  double correction_seconds = 0.0;
  std::size_t llm_calls = 0;
  double corrected_fraction = 0.0;
  nlohmann::json to_json() const;
};

// Sums wall-clock time per phase. corrected_fraction is the share of samples
// with an initial generation that also have a correction record.
EfficiencyReport efficiency_report(const std::vector<CallRecord>& log);

}  // namespace srvf
