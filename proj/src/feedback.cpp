#include "srvf/feedback.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "srvf/error.hpp"
#include "srvf/features.hpp"
#include "srvf/hash.hpp"
#include "srvf/kernels.hpp"
#include "srvf/prompt.hpp"
#include "srvf/text.hpp"

namespace srvf {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_sim(const AnchorSet& set, std::span<const double> e, std::size_t dim) {
  std::vector<double> sims(set.size());
  kernels::omp::sim_scan(e, set.embeddings, dim, sims);
  return *std::max_element(sims.begin(), sims.end());
}

std::vector<double> embed_text(const SupervisorModel& model, std::string_view text) {
  return model.embed(text);
}

}  // namespace

// ---- index ---------------------------------------------------------------------------

AnchorIndex AnchorIndex::build(const SupervisorModel& model, const RationaleStore& store) {
  AnchorIndex idx;
  idx.dim_ = model.dim();
  idx.store_ = store;
  auto fill = [&](const std::vector<Rationale>& rs, std::map<std::string, AnchorSet>& out) {
    std::vector<SparseFeatures> features;
    features.reserve(rs.size());
    for (const auto& r : rs) features.push_back(featurize(model.config(), r.text));
    std::vector<double> emb(rs.size() * idx.dim_);
    kernels::omp::embed_batch(model, features, emb);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      auto& set = out[rs[i].predicted.name];
      set.rationales.push_back(rs[i]);
      set.embeddings.insert(set.embeddings.end(), emb.begin() + i * idx.dim_,
                            emb.begin() + (i + 1) * idx.dim_);
    }
  };
  fill(store.biased(), idx.biased_);
  fill(store.unbiased(), idx.unbiased_);
  return idx;
}

const AnchorSet& AnchorIndex::biased(const RelationLabel& y) const {
  auto it = biased_.find(y.name);
  return it == biased_.end() ? empty_ : it->second;
}

const AnchorSet& AnchorIndex::unbiased(const RelationLabel& y) const {
  auto it = unbiased_.find(y.name);
  return it == unbiased_.end() ? empty_ : it->second;
}

bool AnchorIndex::in_universe(const RelationLabel& y) const {
  return biased_.count(y.name) || unbiased_.count(y.name);
}

// ---- verification --------------------------------------------------------------------

Verification verify_embedded(const AnchorIndex& index, std::span<const double> e,
                             const RelationLabel& y) {
  if (!index.in_universe(y)) return {kInf, Verdict::Biased};
  const AnchorSet& sb = index.biased(y);
  if (sb.size() == 0) return {-kInf, Verdict::Unbiased};
  const AnchorSet& su = index.unbiased(y);
  if (su.size() == 0) return {kInf, Verdict::Biased};
  const double p_b = max_sim(sb, e, index.dim()) - max_sim(su, e, index.dim());
  return {p_b, p_b > 0.0 ? Verdict::Biased : Verdict::Unbiased};
}

Verification verify(const SupervisorModel& model, const AnchorIndex& index, std::string_view r,
                    const RelationLabel& y) {
  return verify_embedded(index, embed_text(model, r), y);
}

// ---- retrieval -------------------------------------------------------------------------

void LoopConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (feedback_demo_count < 1) throw ConfigError("feedback_demo_count must be at least 1");
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

std::vector<Demonstration> retrieve_feedback_embedded(const AnchorIndex& index,
                                                      std::span<const double> e,
                                                      const RelationLabel& y,
                                                      const LoopConfig& cfg) {
  const AnchorSet& sb = index.biased(y);
  if (sb.size() == 0) throw NoAnchors("no biased anchors for label '" + y.name + "'");
  std::vector<double> sims(sb.size());
  kernels::omp::sim_scan(e, sb.embeddings, index.dim(), sims);
  std::vector<Demonstration> out;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i : top_k_indices(sims, cfg.k)) {
    const std::string& id = sb.rationales[i].sample_id;
    if (!seen.insert(id).second) continue;
    const Rationale* u = index.store().unbiased_for(id);
    if (!u) continue;
    out.push_back(make_demonstration(index.store().sample(id), u->text));
    if (out.size() == cfg.feedback_demo_count) break;
  }
  return out;
}

std::vector<Demonstration> retrieve_feedback(const SupervisorModel& model,
                                             const AnchorIndex& index, std::string_view r,
                                             const RelationLabel& y, const LoopConfig& cfg) {
  return retrieve_feedback_embedded(index, embed_text(model, r), y, cfg);
}

// ---- sentence-level loop ---------------------------------------------------------------

namespace {

std::vector<std::string> demo_ids(const std::vector<Demonstration>& demos) {
  std::vector<std::string> ids;
  for (const auto& d : demos) ids.push_back(d.sample.id);
  return ids;
}

struct Iterate {
  std::string rationale;
  RelationLabel label;
  std::string raw;
  double p_b = 0.0;
};

Prediction fallback_prediction(const LabeledSample& sample, const LabelSet& labels) {
  Prediction p;
  p.sample_id = sample.id;
  p.label = labels.fallback_negative();
  p.rationale_text = std::string(kUnparseableRationale);
  return p;
}

}  // namespace

Prediction predict_icl(const LabeledSample& sample, LlmBackend& backend,
                       const std::vector<Demonstration>& demos, const LabelSet& labels,
                       const CallContext& ctx, const Logger& logger) {
  PromptSpec spec;
  spec.demonstrations = demos;
  spec.inference_sample = sample;
  spec.labels = labels;
  CallContext c = ctx;
  c.sample_id = sample.id;
  c.phase = Phase::InitialGeneration;
  c.seed = derive_seed(ctx.seed, "iteration", 0);
  try {
    Generation g = generate_re(backend, render_re_prompt(spec), labels, c);
    Prediction p;
    p.sample_id = sample.id;
    p.rationale_text = g.rationale_text;
    p.label = g.label;
    p.raw_response = g.raw;
    p.llm_calls = g.calls;
    return p;
  } catch (const Error& e) {
    logger.warn("icl.backend_error", {{"sample", sample.id}, {"error", e.what()}});
    Prediction p = fallback_prediction(sample, labels);
    p.llm_calls = 1;
    return p;
  }
}

Prediction predict_with_feedback(const LabeledSample& sample, LlmBackend& backend,
                                 const SupervisorModel& model, const AnchorIndex& index,
                                 const std::vector<Demonstration>& initial_demos,
                                 const LabelSet& labels, const LoopConfig& cfg,
                                 const CallContext& ctx, const Logger& logger) {
  cfg.validate();
  PromptSpec spec;
  spec.inference_sample = sample;
  spec.labels = labels;
  spec.demonstrations = initial_demos;

  Prediction out;
  out.sample_id = sample.id;
  std::vector<Iterate> iterates;
  std::vector<std::string> used_ids = demo_ids(initial_demos);
  std::optional<RelationLabel> previous_label;

  auto finish = [&](const Iterate& it) {
    out.rationale_text = it.rationale;
    out.label = it.label;
    out.raw_response = it.raw;
    return out;
  };
  auto exhausted = [&]() {
    if (iterates.empty()) {
      Prediction p = fallback_prediction(sample, labels);
      p.llm_calls = out.llm_calls;
      p.iterations_used = out.iterations_used;
      p.p_b_trace = out.p_b_trace;
      return p;
    }
    if (cfg.fallback == LoopConfig::Fallback::LastPrediction) return finish(iterates.back());
    auto best = std::min_element(iterates.begin(), iterates.end(),
                                 [](const Iterate& a, const Iterate& b) { return a.p_b < b.p_b; });
    return finish(*best);
  };

  for (std::size_t it = 0;; ++it) {
    CallContext c = ctx;
    c.sample_id = sample.id;
    c.phase = it == 0 ? Phase::InitialGeneration : Phase::Correction;
    c.seed = derive_seed(ctx.seed, "iteration", it);
    out.iterations_used = it;
    std::optional<Iterate> current;
    try {
      Generation g = generate_re(backend, render_re_prompt(spec), labels, c);
      out.llm_calls += g.calls;
      if (g.status != Generation::Status::Fallback)
        current = Iterate{g.rationale_text, g.label, g.raw, 0.0};
    } catch (const Error& e) {
      ++out.llm_calls;
      logger.warn("loop.backend_error", {{"sample", sample.id}, {"iteration", it}, {"error", e.what()}});
    }

    if (current) {
      const std::vector<double> e = embed_text(model, current->rationale);
      const Verification v = verify_embedded(index, e, current->label);
      current->p_b = v.p_b;
      out.p_b_trace.push_back(v.p_b);
      iterates.push_back(*current);
      if (v.verdict == Verdict::Unbiased) return finish(*current);
      if (it >= cfg.max_iters) return exhausted();
      std::vector<Demonstration> next;
      try {
        next = retrieve_feedback_embedded(index, e, current->label, cfg);
      } catch (const NoAnchors&) {
        next = initial_demos;
      }
      if (next.empty()) next = initial_demos;
      const auto next_ids = demo_ids(next);
      if (next_ids == used_ids && previous_label && *previous_label == current->label) {
        logger.info("loop.fixed_point", {{"sample", sample.id}, {"iteration", it}});
        return exhausted();
      }
      previous_label = current->label;
      used_ids = next_ids;
      spec.demonstrations = std::move(next);
    } else if (it >= cfg.max_iters) {
      return exhausted();
    }
  }
}

RelationLabel majority_vote(const std::vector<RelationLabel>& candidates) {
  if (candidates.empty()) throw Error("majority vote over no candidates");
  std::vector<std::pair<RelationLabel, std::size_t>> counts;  // first-occurrence order
  for (const auto& c : candidates) {
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == c; });
    if (it == counts.end())
      counts.emplace_back(c, 1);
    else
      ++it->second;
  }
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

Prediction self_consistency(LlmBackend& backend, const PromptSpec& spec, std::size_t n,
                            const CallContext& ctx, const Logger& logger) {
  if (n < 1) throw ConfigError("self-consistency needs at least one candidate");
  const std::string prompt = render_re_prompt(spec);
  Prediction out;
  out.sample_id = spec.inference_sample.id;
  std::vector<RelationLabel> votes;
  std::vector<Generation> gens;
  for (std::size_t i = 0; i < n; ++i) {
    CallContext c = ctx;
    c.sample_id = spec.inference_sample.id;
    c.phase = Phase::InitialGeneration;
    c.seed = derive_seed(ctx.seed, "self-consistency", i);
    try {
      Generation g = generate_re(backend, prompt, spec.labels, c);
      out.llm_calls += g.calls;
      if (g.status == Generation::Status::Fallback) continue;
      votes.push_back(g.label);
      gens.push_back(std::move(g));
    } catch (const Error& e) {
      ++out.llm_calls;
      logger.warn("self_consistency.backend_error",
                  {{"sample", spec.inference_sample.id}, {"candidate", i}, {"error", e.what()}});
    }
  }
  if (votes.empty()) {
    out.label = spec.labels.fallback_negative();
    out.rationale_text = std::string(kUnparseableRationale);
    return out;
  }
  out.label = majority_vote(votes);
  for (const auto& g : gens)
    if (g.label == out.label) {
      out.rationale_text = g.rationale_text;
      out.raw_response = g.raw;
      break;
    }
  return out;
}

// ---- initial demonstrations ----------------------------------------------------------

std::string_view to_string(InitDemoStrategy s) {
  switch (s) {
    case InitDemoStrategy::Random: return "random";
    case InitDemoStrategy::SimcseLike: return "simcse-like";
    case InitDemoStrategy::File: return "file";
  }
  return "";
}

InitDemoStrategy parse_init_demo_strategy(std::string_view s) {
  if (s == "random") return InitDemoStrategy::Random;
  if (s == "simcse-like") return InitDemoStrategy::SimcseLike;
  if (s == "file") return InitDemoStrategy::File;
  throw ConfigError("unknown initial demonstration strategy '" + std::string(s) + "'");
}

DemoSelector::DemoSelector(std::vector<Demonstration> pool, std::size_t count,
                           InitDemoStrategy strategy, const SupervisorModel* model,
                           std::map<std::string, std::vector<std::string>> fixed)
    : pool_(std::move(pool)), count_(count), strategy_(strategy), model_(model), fixed_(std::move(fixed)) {
  if (strategy_ == InitDemoStrategy::SimcseLike) {
    if (!model_) throw ConfigError("simcse-like demonstration selection needs a model");
    std::vector<SparseFeatures> features;
    for (const auto& d : pool_) features.push_back(featurize(model_->config(), d.sample.sentence));
    pool_embeddings_.resize(pool_.size() * model_->dim());
    kernels::omp::embed_batch(*model_, features, pool_embeddings_);
  }
}

std::vector<Demonstration> DemoSelector::select(const LabeledSample& sample, std::uint64_t seed) const {
  const std::size_t n = std::min(count_, pool_.size());
  switch (strategy_) {
    case InitDemoStrategy::Random: {
      std::vector<std::size_t> order(pool_.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(seed, "init-demos"));
      stable_shuffle(order.begin(), order.end(), rng);
      std::vector<Demonstration> out;
      for (std::size_t i = 0; i < n; ++i) out.push_back(pool_[order[i]]);
      return out;
    }
    case InitDemoStrategy::SimcseLike: {
      const auto e = model_->embed(sample.sentence);
      std::vector<double> sims(pool_.size());
      kernels::omp::sim_scan(e, pool_embeddings_, model_->dim(), sims);
      std::vector<Demonstration> out;
      for (auto i : top_k_indices(sims, n)) out.push_back(pool_[i]);
      return out;
    }
    case InitDemoStrategy::File: {
      std::vector<Demonstration> out;
      auto it = fixed_.find(sample.id);
      if (it == fixed_.end()) return out;
      for (const auto& id : it->second) {
        auto d = std::find_if(pool_.begin(), pool_.end(), [&](const Demonstration& x) { return x.sample.id == id; });
        if (d == pool_.end()) throw DataError("demonstration '" + id + "' for sample '" + sample.id + "' is not in the pool");
        out.push_back(*d);
      }
      return out;
    }
  }
  return {};
}

std::map<std::string, std::vector<std::string>> load_demo_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path)).get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError("demonstration file '" + path.string() + "': " + e.what());
  }
}

// ---- batch runners ---------------------------------------------------------------------

namespace {

template <typename Fn>
std::vector<Prediction> run_parallel(const std::vector<LabeledSample>& test, Fn&& fn) {
  std::vector<Prediction> out(test.size());
  std::vector<std::string> errors(test.size());
  const auto n = static_cast<std::ptrdiff_t>(test.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out[u] = fn(test[u]);
    } catch (const std::exception& e) {
      errors[u] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("sample '" + test[i].id + "': " + errors[i]);
  return out;
}

}  // namespace

std::vector<Prediction> run_icl(const std::vector<LabeledSample>& test, LlmBackend& backend,
                                const DemoSelector& selector, const LabelSet& labels,
                                std::uint64_t seed, CallLog* log, const Logger& logger) {
  return run_parallel(test, [&](const LabeledSample& s) {
    const std::uint64_t ss = derive_seed(seed, s.id);
    return predict_icl(s, backend, selector.select(s, ss), labels, CallContext{ss, Phase::InitialGeneration, s.id, log}, logger);
  });
}

std::vector<Prediction> run_srvf(const std::vector<LabeledSample>& test, LlmBackend& backend,
                                 const SupervisorModel& model, const AnchorIndex& index,
                                 const DemoSelector& selector, const LabelSet& labels,
                                 const LoopConfig& cfg, std::uint64_t seed, CallLog* log,
                                 const Logger& logger) {
  cfg.validate();
  return run_parallel(test, [&](const LabeledSample& s) {
    const std::uint64_t ss = derive_seed(seed, s.id);
    return predict_with_feedback(s, backend, model, index, selector.select(s, ss), labels, cfg,
                                 CallContext{ss, Phase::InitialGeneration, s.id, log}, logger);
  });
}

std::vector<Prediction> run_self_consistency(const std::vector<LabeledSample>& test,
                                             LlmBackend& backend, const DemoSelector& selector,
                                             const LabelSet& labels, std::size_t n,
                                             std::uint64_t seed, CallLog* log,
                                             const Logger& logger) {
  return run_parallel(test, [&](const LabeledSample& s) {
    const std::uint64_t ss = derive_seed(seed, s.id);
    PromptSpec spec;
    spec.demonstrations = selector.select(s, ss);
    spec.inference_sample = s;
    spec.labels = labels;
    return self_consistency(backend, spec, n, CallContext{ss, Phase::InitialGeneration, s.id, log}, logger);
  });
}

// ---- prediction files ------------------------------------------------------------------

namespace {

json pb_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double pb_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw DataError("bad p_b value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

std::string format_predictions(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    json trace = json::array();
    for (double v : p.p_b_trace) trace.push_back(pb_value(v));
    json j = {{"id", p.sample_id},           {"label", p.label.name},
              {"rationale", p.rationale_text}, {"p_b_trace", trace},
              {"iterations_used", p.iterations_used}, {"llm_calls", p.llm_calls}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
  write_file(path, format_predictions(preds));
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path, const LabelSet& labels) {
  std::vector<Prediction> out;
  const std::string content = read_file(path);
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Prediction p;
      p.sample_id = j.at("id").get<std::string>();
      const auto name = j.at("label").get<std::string>();
      auto label = labels.match(name);
      if (!label) throw DataError("unknown label '" + name + "'");
      p.label = *label;
      p.rationale_text = j.value("rationale", std::string());
      if (auto t = j.find("p_b_trace"); t != j.end())
        for (const auto& v : *t) p.p_b_trace.push_back(pb_from(v));
      p.iterations_used = j.value("iterations_used", std::size_t{0});
      p.llm_calls = j.value("llm_calls", std::size_t{0});
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed prediction: ") + e.what(), line_no);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return out;
}

// ---- documents -------------------------------------------------------------------------

std::size_t select_document_demo(const std::vector<Document>& demos,
                                 const std::vector<Triplet>& biased) {
  std::set<std::string> wanted;
  for (const auto& t : biased) wanted.insert(t.relation.name);
  std::size_t best = 0, best_shared = 0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    std::set<std::string> have;
    for (const auto& t : demos[i].triplets)
      if (wanted.count(t.relation.name)) have.insert(t.relation.name);
    if (have.size() > best_shared) {
      best_shared = have.size();
      best = i;
    }
  }
  return best;
}

DocumentPrediction predict_document(const Document& doc, LlmBackend& backend,
                                    const SupervisorModel& model, const AnchorIndex& index,
                                    const std::vector<Document>& demos, std::size_t initial_demo,
                                    const LabelSet& relations, const LoopConfig& cfg,
                                    const CallContext& ctx, const Logger& logger) {
  cfg.validate();
  DocumentPrediction out;
  if (doc.entities.empty()) return out;
  if (demos.empty()) throw ConfigError("document prediction needs at least one demonstration document");
  if (initial_demo >= demos.size()) throw ConfigError("initial demonstration index out of range");

  auto predict_round = [&](std::size_t d, std::size_t round) {
    CallContext c = ctx;
    c.sample_id = doc.id;
    c.phase = round == 0 ? Phase::InitialGeneration : Phase::Correction;
    ++out.rounds;
    c.seed = derive_seed(ctx.seed, "doc-pairs", round);
    std::vector<EntityPair> pairs;
    try {
      ++out.llm_calls;
      pairs = parse_pairs(complete(backend, render_pair_prompt(demos[d], doc, relations), c));
    } catch (const Error& e) {
      logger.warn("document.pairs_failed", {{"doc", doc.id}, {"round", round}, {"error", e.what()}});
      return std::vector<Triplet>{};
    }
    if (pairs.empty()) return std::vector<Triplet>{};
    c.seed = derive_seed(ctx.seed, "doc-triplets", round);
    try {
      ++out.llm_calls;
      TripletParse tp = parse_triplets(
          complete(backend, render_triplet_prompt(demos[d], doc, pairs, relations), c), relations);
      out.dropped += tp.dropped;
      return tp.triplets;
    } catch (const Error& e) {
      logger.warn("document.triplets_failed", {{"doc", doc.id}, {"round", round}, {"error", e.what()}});
      return std::vector<Triplet>{};
    }
  };

  std::set<Triplet> unbiased;
  std::vector<Triplet> current = predict_round(initial_demo, 0);
  for (std::size_t round = 1; round <= cfg.max_iters; ++round) {
    std::vector<Triplet> biased;
    for (const auto& t : current) {
      const std::string rationale = t.explanation.empty() ? format_triplet(t) : t.explanation;
      if (verify(model, index, rationale, t.relation).verdict == Verdict::Unbiased)
        unbiased.insert(t);
      else
        biased.push_back(t);
    }
    if (biased.empty() || round == cfg.max_iters) break;
    current = predict_round(select_document_demo(demos, biased), round);
  }
  out.triplets.assign(unbiased.begin(), unbiased.end());
  return out;
}

}  // namespace srvf
