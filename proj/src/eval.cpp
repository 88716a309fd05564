#include "srvf/eval.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"

namespace srvf {

namespace {

bool is_negative(const RelationLabel& l, const std::vector<RelationLabel>& negatives) {
  return std::find(negatives.begin(), negatives.end(), l) != negatives.end();
}

}  // namespace

F1Counts count_f1(const std::vector<GoldPred>& preds, const std::vector<RelationLabel>& negatives) {
  F1Counts c;
  for (const auto& [gold, pred] : preds) {
    const bool gn = is_negative(gold, negatives);
    const bool pn = is_negative(pred, negatives);
    if (gold == pred) {
      if (!gn) ++c.tp;
      continue;
    }
    if (!pn) ++c.fp;
    if (!gn) ++c.fn;
  }
  return c;
}

double micro_f1(const std::vector<GoldPred>& preds, const std::vector<RelationLabel>& negatives) {
  const F1Counts c = count_f1(preds, negatives);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::vector<GoldPred> align(const std::vector<LabeledSample>& gold,
                            const std::vector<Prediction>& preds) {
  std::map<std::string, const Prediction*, std::less<>> by_id;
  for (const auto& p : preds) by_id[p.sample_id] = &p;
  std::vector<GoldPred> out;
  out.reserve(gold.size());
  for (const auto& s : gold) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw DataError("no prediction for sample '" + s.id + "'");
    out.emplace_back(s.gold, it->second->label);
  }
  return out;
}

std::vector<LabeledSample> sample_kshot_sentence(const std::vector<LabeledSample>& data,
                                                 std::size_t k, std::uint64_t seed,
                                                 const Logger& logger) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].gold.name].push_back(i);
  std::vector<LabeledSample> out;
  if (k == 0) return out;
  for (auto& [label, idx] : by_label) {
    std::mt19937_64 rng(derive_seed(seed, label));
    stable_shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() < k)
      logger.warn("kshot.shortfall", {{"label", label}, {"available", idx.size()}, {"k", k}});
    for (std::size_t j = 0; j < std::min(k, idx.size()); ++j) out.push_back(data[idx[j]]);
  }
  return out;
}

KshotDocuments sample_kshot_document(const std::vector<Document>& docs, std::size_t k,
                                     std::size_t relation_count, std::uint64_t seed,
                                     const Logger& logger) {
  if (relation_count == 0) throw ConfigError("relation set must not be empty");
  KshotDocuments out;
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, "kshot-docs"));
  stable_shuffle(order.begin(), order.end(), rng);
  std::map<std::string, std::size_t> kept_count;
  std::size_t kept_triplets = 0;
  std::size_t next = 0;
  while (out.q <= static_cast<double>(k)) {
    if (next == order.size()) {
      out.exhausted = true;
      logger.warn("kshot.corpus_exhausted",
                  {{"kept_docs", out.docs.size()}, {"q", out.q}, {"k", k}});
      break;
    }
    const Document& d = docs[order[next++]];
    ++out.draws;
    const bool unfinished = std::any_of(d.triplets.begin(), d.triplets.end(), [&](const Triplet& t) {
      return kept_count[t.relation.name] < k;
    });
    if (unfinished) {
      out.docs.push_back(d);
      for (const auto& t : d.triplets) ++kept_count[t.relation.name];
      kept_triplets += d.triplets.size();
    }
    out.q = static_cast<double>(kept_triplets) / static_cast<double>(relation_count);
  }
  return out;
}

// ---- error matrix ----------------------------------------------------------------------

void ErrorMatrix::add(const RelationLabel& gold, const RelationLabel& predicted) {
  if (gold == predicted) return;
  ++cells_[{gold.name, predicted.name}];
}

std::size_t ErrorMatrix::at(std::string_view gold, std::string_view predicted) const {
  auto it = cells_.find({std::string(gold), std::string(predicted)});
  return it == cells_.end() ? 0 : it->second;
}

std::size_t ErrorMatrix::total() const {
  std::size_t t = 0;
  for (const auto& [_, c] : cells_) t += c;
  return t;
}

std::size_t ErrorMatrix::row_sum(std::string_view gold) const {
  std::size_t t = 0;
  for (const auto& [key, c] : cells_)
    if (key.first == gold) t += c;
  return t;
}

std::vector<ErrorMatrix::Cell> ErrorMatrix::worst(std::size_t n) const {
  std::vector<Cell> out;
  for (const auto& [key, c] : cells_)
    if (c > 0) out.push_back({key.first, key.second, c});
  std::stable_sort(out.begin(), out.end(), [](const Cell& a, const Cell& b) { return a.count > b.count; });
  if (out.size() > n) out.resize(n);
  return out;
}

std::string ErrorMatrix::to_csv(const LabelSet& labels) const {
  std::vector<std::string> names;
  for (const auto& l : labels.labels()) names.push_back(l.name);
  for (const auto& [key, _] : cells_)
    for (const auto& n : {key.first, key.second})
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  std::string out = "gold\\predicted";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (const auto& g : names) {
    out += g;
    for (const auto& p : names) out += "," + std::to_string(at(g, p));
    out += "\n";
  }
  return out;
}

nlohmann::json ErrorMatrix::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : worst()) cells.push_back({{"gold", c.gold}, {"predicted", c.predicted}, {"count", c.count}});
  return cells;
}

ErrorMatrix error_matrix(const std::vector<GoldPred>& preds) {
  ErrorMatrix m;
  for (const auto& [g, p] : preds) m.add(g, p);
  return m;
}

// ---- efficiency ------------------------------------------------------------------------

nlohmann::json EfficiencyReport::to_json() const {
  return {{"pre_inference_seconds", pre_inference_seconds},
          {"initial_generation_seconds", initial_generation_seconds},
          {"correction_seconds", correction_seconds},
          {"llm_calls", llm_calls},
          {"corrected_fraction", corrected_fraction}};
}

EfficiencyReport efficiency_report(const std::vector<CallRecord>& log) {
  EfficiencyReport r;
  std::set<std::string> initial, corrected;
  for (const auto& rec : log) {
    if (rec.llm_call) ++r.llm_calls;
    switch (rec.phase) {
      case Phase::PreInference: r.pre_inference_seconds += rec.seconds; break;
      case Phase::InitialGeneration:
        r.initial_generation_seconds += rec.seconds;
        initial.insert(rec.sample_id);
        break;
      case Phase::Correction:
        r.correction_seconds += rec.seconds;
        corrected.insert(rec.sample_id);
        break;
    }
  }
  std::size_t both = 0;
  for (const auto& id : corrected) both += initial.count(id);
  r.corrected_fraction = initial.empty() ? 0.0 : static_cast<double>(both) / static_cast<double>(initial.size());
  return r;
}

}  // namespace srvf
