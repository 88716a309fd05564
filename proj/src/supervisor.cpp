#include "srvf/supervisor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"

namespace srvf {

// ---- model ---------------------------------------------------------------------

SupervisorModel::SupervisorModel(EncoderConfig config, double tau, std::uint64_t init_seed)
    : config_(config), tau_(tau), init_seed_(init_seed) {
  config_.validate();
  if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw ConfigError("tau must be positive");
}

double SupervisorModel::initial_weight(std::size_t row, std::uint32_t col) const {
  // Uniform on [-sqrt(3/dim), sqrt(3/dim)]: zero mean, variance 1/dim.
  const double u = unit_interval(hash_combine(hash_combine(splitmix64(init_seed_), col), row));
  return (2.0 * u - 1.0) * std::sqrt(3.0 / static_cast<double>(config_.dim));
}

void SupervisorModel::column(std::uint32_t col, std::span<double> out) const {
  if (const double* stored = stored_column(col)) {
    std::copy(stored, stored + config_.dim, out.begin());
    return;
  }
  for (std::size_t r = 0; r < config_.dim; ++r) out[r] = initial_weight(r, col);
}

const double* SupervisorModel::stored_column(std::uint32_t col) const {
  auto it = slots_.find(col);
  return it == slots_.end() ? nullptr : data_.data() + it->second * config_.dim;
}

std::span<double> SupervisorModel::mutable_column(std::uint32_t col) {
  if (col >= config_.feature_space) throw ConfigError("projection column out of range");
  auto [it, inserted] = slots_.emplace(col, slots_.size());
  if (inserted) {
    data_.resize(data_.size() + config_.dim);
    double* dst = data_.data() + it->second * config_.dim;
    for (std::size_t r = 0; r < config_.dim; ++r) dst[r] = initial_weight(r, col);
  }
  return {data_.data() + it->second * config_.dim, config_.dim};
}

void SupervisorModel::materialize_all() {
  for (std::size_t c = 0; c < config_.feature_space; ++c) mutable_column(static_cast<std::uint32_t>(c));
}

std::vector<std::uint32_t> SupervisorModel::stored_column_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(slots_.size());
  for (const auto& [c, _] : slots_) ids.push_back(c);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SupervisorModel::project(const SparseFeatures& f, std::span<double> out) const {
  const std::size_t dim = config_.dim;
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> scratch;
  for (std::size_t k = 0; k < f.nnz(); ++k) {
    const double x = f.value[k];
    const double* col = stored_column(f.index[k]);
    if (!col) {
      scratch.resize(dim);
      column(f.index[k], scratch);
      col = scratch.data();
    }
    for (std::size_t r = 0; r < dim; ++r) out[r] += x * col[r];
  }
}

std::vector<double> SupervisorModel::embed(std::string_view text) const {
  const SparseFeatures f = featurize(config_, text);
  std::vector<double> e(config_.dim);
  project(f, e);
  if (config_.normalize) normalize_in_place(e);
  return e;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double normalize_in_place(std::span<double> v) {
  double n = std::sqrt(dot(v, v));
  if (n > 0.0)
    for (auto& x : v) x /= n;
  return n;
}

double sim(const SupervisorModel& model, std::string_view r1, std::string_view r2) {
  return dot(model.embed(r1), model.embed(r2));
}

// ---- pairs ------------------------------------------------------------------------

bool is_positive(PairClass c) {
  return c == PairClass::SameGoldUnbiased || c == PairClass::SameBiasSituation;
}

std::string_view to_string(PairClass c) {
  switch (c) {
    case PairClass::SameGoldUnbiased: return "same_gold_unbiased";
    case PairClass::SameBiasSituation: return "same_bias_situation";
    case PairClass::SameSampleBiasedVsUnbiased: return "same_sample_biased_vs_unbiased";
    case PairClass::DifferentBiasSituations: return "different_bias_situations";
  }
  return "";
}

std::optional<PairClass> classify_pair(const Rationale& a, const RelationLabel& gold_a,
                                       const Rationale& b, const RelationLabel& gold_b) {
  const bool ua = a.kind == RationaleKind::Unbiased;
  const bool ub = b.kind == RationaleKind::Unbiased;
  const bool same_sample = a.sample_id == b.sample_id;
  if (ua && ub) {
    if (!same_sample && gold_a == gold_b) return PairClass::SameGoldUnbiased;
    return std::nullopt;
  }
  if (ua != ub) {
    if (same_sample) return PairClass::SameSampleBiasedVsUnbiased;
    return std::nullopt;
  }
  const bool same_situation = gold_a == gold_b && a.predicted == b.predicted;
  if (same_situation) {
    if (!same_sample) return PairClass::SameBiasSituation;
    return std::nullopt;
  }
  return PairClass::DifferentBiasSituations;
}

PairBatch build_pairs(const RationaleStore& store, const PairSamplerConfig& cfg,
                      const Logger& logger) {
  PairBatch batch;
  for (const auto* rs : {&store.unbiased(), &store.biased()})
    for (const auto& r : *rs) {
      batch.rationales.push_back(r);
      batch.golds.push_back(store.sample(r.sample_id).gold);
    }
  const std::size_t n = batch.rationales.size();
  std::array<std::size_t, 4> per_class{};
  auto emit = [&](std::uint32_t i, std::uint32_t j, PairClass c) {
    ++per_class[static_cast<std::size_t>(c)];
    (is_positive(c) ? batch.pos : batch.neg).push_back({i, j, c});
  };

  const std::size_t candidates = n < 2 ? 0 : n * (n - 1) / 2;
  if (candidates <= cfg.enumeration_cutoff) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (auto c = classify_pair(batch.rationales[i], batch.golds[i], batch.rationales[j], batch.golds[j]))
          emit(i, j, *c);
  } else {
    std::mt19937_64 rng(derive_seed(cfg.seed, "pairs"));
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    const std::size_t budget = 20 * 4 * cfg.per_class_quota;
    for (std::size_t t = 0; t < budget; ++t) {
      if (std::all_of(per_class.begin(), per_class.end(),
                      [&](std::size_t c) { return c >= cfg.per_class_quota; }))
        break;
      auto i = static_cast<std::uint32_t>(uniform_below(rng, n));
      auto j = static_cast<std::uint32_t>(uniform_below(rng, n));
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      auto c = classify_pair(batch.rationales[i], batch.golds[i], batch.rationales[j], batch.golds[j]);
      if (!c || per_class[static_cast<std::size_t>(*c)] >= cfg.per_class_quota) continue;
      if (!seen.emplace(i, j).second) continue;
      emit(i, j, *c);
    }
  }
  for (std::size_t c = 0; c < per_class.size(); ++c)
    if (per_class[c] == 0)
      logger.warn("pairs.empty_class", {{"class", to_string(static_cast<PairClass>(c))}});
  return batch;
}

// ---- loss ----------------------------------------------------------------------------

namespace {

double log_sum_exp(std::span<const double> scaled) {
  if (scaled.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(scaled.begin(), scaled.end());
  double acc = 0.0;
  for (double s : scaled) acc += std::exp(s - m);
  return m + std::log(acc);
}

struct Terms {
  double loss;
  double lse_pos;
  double lse_all;
};

Terms loss_terms(std::span<const double> pos_sims, std::span<const double> neg_sims, double tau) {
  if (pos_sims.empty()) throw Error("contrastive loss needs at least one positive pair");
  std::vector<double> pos(pos_sims.size()), neg(neg_sims.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = pos_sims[i] / tau;
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = neg_sims[i] / tau;
  const double lse_pos = log_sum_exp(pos);
  // log(sum_all) = lse_pos + log1p(sum_neg / sum_pos); keeps the loss >= 0.
  const double ratio = neg.empty() ? 0.0 : std::exp(log_sum_exp(neg) - lse_pos);
  const double tail = std::log1p(ratio);
  const double loss = std::log(static_cast<double>(pos.size())) + tail;
  return {loss, lse_pos, lse_pos + tail};
}

// Per-text gradient dL/dz for every rationale index used by the pairs.
struct TextGrads {
  double loss = 0.0;
  std::vector<std::uint32_t> ids;
  std::vector<double> grad;  // ids.size() x dim
};

using Projector = std::function<void(std::uint32_t, std::span<double>)>;

TextGrads loss_and_text_grads(const SupervisorModel& model, const Projector& project,
                              std::span<const RationalePair> pos,
                              std::span<const RationalePair> neg) {
  const std::size_t dim = model.dim();
  TextGrads out;
  std::unordered_map<std::uint32_t, std::uint32_t> slot;
  auto add = [&](std::uint32_t id) {
    if (slot.emplace(id, static_cast<std::uint32_t>(out.ids.size())).second) out.ids.push_back(id);
  };
  for (const auto* ps : {&pos, &neg})
    for (const auto& p : *ps) {
      add(p.a);
      add(p.b);
    }
  const std::size_t m = out.ids.size();
  std::vector<double> emb(m * dim), norms(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::span<double> e(emb.data() + i * dim, dim);
    project(out.ids[i], e);
    if (model.config().normalize) norms[i] = normalize_in_place(e);
  }
  auto e_of = [&](std::uint32_t id) {
    return std::span<const double>(emb.data() + slot.at(id) * dim, dim);
  };
  std::vector<double> pos_s(pos.size()), neg_s(neg.size());
  for (std::size_t p = 0; p < pos.size(); ++p) pos_s[p] = dot(e_of(pos[p].a), e_of(pos[p].b));
  for (std::size_t p = 0; p < neg.size(); ++p) neg_s[p] = dot(e_of(neg[p].a), e_of(neg[p].b));
  const double tau = model.tau();
  const Terms t = loss_terms(pos_s, neg_s, tau);
  out.loss = t.loss;

  // dL/ds = (softmax over all - softmax over positives) / tau.
  std::vector<double> ge(m * dim, 0.0);
  auto accumulate = [&](const RationalePair& p, double g) {
    const std::size_t sa = slot.at(p.a), sb = slot.at(p.b);
    for (std::size_t r = 0; r < dim; ++r) {
      ge[sa * dim + r] += g * emb[sb * dim + r];
      ge[sb * dim + r] += g * emb[sa * dim + r];
    }
  };
  for (std::size_t p = 0; p < pos.size(); ++p) {
    const double s = pos_s[p] / tau;
    accumulate(pos[p], (std::exp(s - t.lse_all) - std::exp(s - t.lse_pos)) / tau);
  }
  for (std::size_t p = 0; p < neg.size(); ++p)
    accumulate(neg[p], std::exp(neg_s[p] / tau - t.lse_all) / tau);

  out.grad.assign(m * dim, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* g = ge.data() + i * dim;
    double* dz = out.grad.data() + i * dim;
    if (!model.config().normalize) {
      std::copy(g, g + dim, dz);
      continue;
    }
    if (norms[i] == 0.0) continue;
    const double* e = emb.data() + i * dim;
    double eg = 0.0;
    for (std::size_t r = 0; r < dim; ++r) eg += e[r] * g[r];
    for (std::size_t r = 0; r < dim; ++r) dz[r] = (g[r] - e[r] * eg) / norms[i];
  }
  return out;
}

}  // namespace

double contrastive_loss_from_sims(std::span<const double> pos_sims,
                                  std::span<const double> neg_sims, double tau) {
  return loss_terms(pos_sims, neg_sims, tau).loss;
}

double contrastive_loss(const SupervisorModel& model, const PairBatch& batch) {
  if (batch.pos.empty()) throw Error("contrastive loss needs at least one positive pair");
  std::vector<std::vector<double>> emb;
  emb.reserve(batch.rationales.size());
  for (const auto& r : batch.rationales) emb.push_back(model.embed(r.text));
  std::vector<double> pos, neg;
  for (const auto& p : batch.pos) pos.push_back(dot(emb[p.a], emb[p.b]));
  for (const auto& p : batch.neg) neg.push_back(dot(emb[p.a], emb[p.b]));
  return contrastive_loss_from_sims(pos, neg, model.tau());
}

LossGradient contrastive_loss_grad(const SupervisorModel& model,
                                   const std::vector<SparseFeatures>& features,
                                   std::span<const RationalePair> pos,
                                   std::span<const RationalePair> neg) {
  const TextGrads tg = loss_and_text_grads(
      model, [&](std::uint32_t id, std::span<double> e) { model.project(features[id], e); }, pos, neg);
  const std::size_t dim = model.dim();
  LossGradient out;
  out.loss = tg.loss;
  for (std::size_t i = 0; i < tg.ids.size(); ++i) {
    const auto& f = features[tg.ids[i]];
    for (std::size_t k = 0; k < f.nnz(); ++k) {
      auto& col = out.columns[f.index[k]];
      col.resize(dim, 0.0);
      for (std::size_t r = 0; r < dim; ++r) col[r] += f.value[k] * tg.grad[i * dim + r];
    }
  }
  return out;
}

// ---- training ------------------------------------------------------------------------

void train_in_place(SupervisorModel& model, const PairBatch& batch, const TrainConfig& cfg,
                    TrainReport* report, const Logger& logger) {
  if (batch.pos.empty()) throw Error("training needs at least one positive pair");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  const std::size_t n = batch.rationales.size();
  const std::size_t dim = model.dim();
  std::vector<SparseFeatures> features;
  features.reserve(n);
  for (const auto& r : batch.rationales) features.push_back(featurize(model.config(), r.text));
  // Store every column the training texts touch up front so the column
  // pointers below stay valid.
  for (const auto& f : features)
    for (auto c : f.index) model.mutable_column(c);
  std::vector<std::vector<double*>> cols(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto c : features[i].index) cols[i].push_back(model.mutable_column(c).data());
  const Projector project = [&](std::uint32_t id, std::span<double> e) {
    std::fill(e.begin(), e.end(), 0.0);
    const auto& f = features[id];
    for (std::size_t k = 0; k < f.nnz(); ++k) {
      const double x = f.value[k];
      const double* col = cols[id][k];
      for (std::size_t r = 0; r < dim; ++r) e[r] += x * col[r];
    }
  };

  if (report) {
    report->positive_pairs = batch.pos.size();
    report->negative_pairs = batch.neg.size();
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::size_t> block(n);
  const std::size_t n_blocks = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::vector<RationalePair>> pos(n_blocks), neg(n_blocks);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "epoch", epoch));
    stable_shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n; ++i) block[order[i]] = i / cfg.batch_size;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      pos[b].clear();
      neg[b].clear();
    }
    for (const auto& p : batch.pos)
      if (block[p.a] == block[p.b]) pos[block[p.a]].push_back(p);
    for (const auto& p : batch.neg)
      if (block[p.a] == block[p.b]) neg[block[p.a]].push_back(p);

    double loss_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      if (pos[b].empty()) continue;
      const TextGrads tg = loss_and_text_grads(model, project, pos[b], neg[b]);
      if (!std::isfinite(tg.loss))
        throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(b) + " (tau " + std::to_string(model.tau()) + ", lr " +
                    std::to_string(cfg.learning_rate) + ")");
      loss_sum += tg.loss;
      ++used;
      // Every text gradient was computed before this update, so applying them
      // one text at a time is the summed gradient step.
      for (std::size_t i = 0; i < tg.ids.size(); ++i) {
        const auto id = tg.ids[i];
        const auto& f = features[id];
        const double* g = tg.grad.data() + i * dim;
        for (std::size_t k = 0; k < f.nnz(); ++k) {
          double* col = cols[id][k];
          const double step = cfg.learning_rate * f.value[k];
          for (std::size_t r = 0; r < dim; ++r) col[r] -= step * g[r];
        }
      }
    }
    const double mean = used ? loss_sum / static_cast<double>(used) : 0.0;
    if (report) report->epoch_loss.push_back(mean);
    logger.info("train.epoch", {{"epoch", epoch}, {"loss", mean}, {"batches", used}});
  }
}

SupervisorModel train(const RationaleStore& store, const TrainConfig& cfg, TrainReport* report,
                      const Logger& logger) {
  PairSamplerConfig pc = cfg.pairs;
  pc.seed = derive_seed(cfg.seed, "pair-sampler");
  const PairBatch batch = build_pairs(store, pc, logger);
  SupervisorModel model(cfg.encoder, cfg.tau, derive_seed(cfg.seed, "init"));
  train_in_place(model, batch, cfg, report, logger);
  return model;
}

// ---- checkpoint ------------------------------------------------------------------------

std::string serialize_model(const SupervisorModel& model) {
  const auto& c = model.config();
  nlohmann::json columns = nlohmann::json::array();
  const std::size_t dim = model.dim();
  for (auto id : model.stored_column_ids()) {
    const double* col = model.stored_column(id);
    columns.push_back({{"col", id}, {"values", std::vector<double>(col, col + dim)}});
  }
  nlohmann::json j = {
      {"version", kCheckpointVersion},
      {"config",
       {{"dim", c.dim},
        {"feature_space", c.feature_space},
        {"ngram_range", {c.ngram_min, c.ngram_max}},
        {"hash_seed", c.hash_seed},
        {"normalize", c.normalize}}},
      {"tau", model.tau()},
      {"init_seed", model.init_seed()},
      {"projection", {{"layout", "sparse_columns"}, {"columns", std::move(columns)}}}};
  return j.dump();
}

SupervisorModel deserialize_model(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    const auto& jc = j.at("config");
    EncoderConfig c;
    c.dim = jc.at("dim").get<std::size_t>();
    c.feature_space = jc.at("feature_space").get<std::size_t>();
    c.ngram_min = jc.at("ngram_range").at(0).get<std::size_t>();
    c.ngram_max = jc.at("ngram_range").at(1).get<std::size_t>();
    c.hash_seed = jc.at("hash_seed").get<std::uint64_t>();
    c.normalize = jc.at("normalize").get<bool>();
    const double tau = j.at("tau").get<double>();
    if (!(tau > 0.0) || !std::isfinite(tau)) throw CheckpointError("checkpoint tau must be positive");
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("invalid encoder config: ") + e.what());
    }
    SupervisorModel model(c, tau, j.value("init_seed", std::uint64_t{0}));
    const auto& proj = j.at("projection");
    auto check = [](double v) {
      if (!std::isfinite(v)) throw CheckpointError("non-finite projection weight");
      return v;
    };
    if (proj.is_array()) {
      // Dense row-major dim x feature_space.
      if (proj.size() != c.dim) throw CheckpointError("projection row count does not match dim");
      for (std::size_t r = 0; r < c.dim; ++r) {
        const auto& row = proj.at(r);
        if (row.size() != c.feature_space)
          throw CheckpointError("projection row length does not match feature_space");
        for (std::size_t col = 0; col < c.feature_space; ++col)
          model.mutable_column(static_cast<std::uint32_t>(col))[r] = check(row.at(col).get<double>());
      }
    } else {
      if (proj.at("layout").get<std::string>() != "sparse_columns")
        throw CheckpointError("unknown projection layout");
      for (const auto& entry : proj.at("columns")) {
        const auto id = entry.at("col").get<std::uint32_t>();
        if (id >= c.feature_space) throw CheckpointError("projection column out of range");
        const auto& values = entry.at("values");
        if (values.size() != c.dim) throw CheckpointError("projection column length does not match dim");
        auto col = model.mutable_column(id);
        for (std::size_t r = 0; r < c.dim; ++r) col[r] = check(values.at(r).get<double>());
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
}

void save_model(const SupervisorModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

SupervisorModel load_model(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const DataError& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_model(content);
}

}  // namespace srvf
