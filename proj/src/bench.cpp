#include "srvf/bench.hpp"

#include <chrono>
#include <memory>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"
#include "srvf/synthetic.hpp"

namespace srvf {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string fallback_name(LoopConfig::Fallback f) {
  return f == LoopConfig::Fallback::LastPrediction ? "last" : "min_pb";
}

LoopConfig::Fallback parse_fallback(const std::string& s) {
  if (s == "last") return LoopConfig::Fallback::LastPrediction;
  if (s == "min_pb") return LoopConfig::Fallback::MinPbPrediction;
  throw ConfigError("unknown loop fallback '" + s + "'");
}

}  // namespace

BenchConfig BenchConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  BenchConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("labels"); it != j.end() && !it->is_string()) {
      c.labels = LabelSet(it->at("names").get<std::vector<std::string>>(),
                          it->value("negatives", std::vector<std::string>{}));
    } else if (it != j.end() && it->get<std::string>() != "semeval") {
      throw ConfigError("unknown label set '" + it->get<std::string>() + "'");
    }
    c.train_path = resolve(base_dir, j.value("train", std::string()));
    c.test_path = resolve(base_dir, j.value("test", std::string()));
    if (auto it = j.find("synthetic"); it != j.end()) {
      c.synthetic_train_per_label = it->value("train_per_label", c.synthetic_train_per_label);
      c.synthetic_test_size = it->value("test_size", c.synthetic_test_size);
    }
    c.methods = j.value("methods", c.methods);
    if (auto it = j.find("init_demos"); it != j.end()) {
      c.init_strategy = parse_init_demo_strategy(it->value("strategy", std::string("random")));
      c.init_demo_count = it->value("count", c.init_demo_count);
      c.init_demo_file = resolve(base_dir, it->value("file", std::string()));
    }
    if (auto it = j.find("loop"); it != j.end()) {
      c.loop.max_iters = it->value("max_iters", c.loop.max_iters);
      c.loop.k = it->value("k", c.loop.k);
      c.loop.feedback_demo_count = it->value("feedback_demos", c.loop.feedback_demo_count);
      c.loop.fallback = parse_fallback(it->value("fallback", fallback_name(c.loop.fallback)));
    }
    if (auto it = j.find("collect"); it != j.end()) {
      c.collect.di_attempts = it->value("di_attempts", c.collect.di_attempts);
      c.collect.lgi_retries = it->value("lgi_retries", c.collect.lgi_retries);
      c.collect.max_reject_fraction = it->value("max_reject_fraction", c.collect.max_reject_fraction);
    }
    if (auto it = j.find("train_config"); it != j.end()) {
      c.train.epochs = it->value("epochs", c.train.epochs);
      c.train.batch_size = it->value("batch_size", c.train.batch_size);
      c.train.learning_rate = it->value("learning_rate", c.train.learning_rate);
      c.train.tau = it->value("tau", c.train.tau);
      c.train.encoder.dim = it->value("dim", c.train.encoder.dim);
    }
    if (auto it = j.find("self_consistency"); it != j.end())
      c.self_consistency_n = it->value("n", c.self_consistency_n);
    if (auto it = j.find("backend"); it != j.end()) {
      c.backend = it->value("type", c.backend);
      if (auto b = it->find("bias"); b != it->end())
        c.bias = b->is_string() ? BiasModel::from_json(json::parse(read_file(resolve(base_dir, b->get<std::string>()))))
                                : BiasModel::from_json(*b);
      c.http.base_url = it->value("base_url", c.http.base_url);
      c.http.model = it->value("model", c.http.model);
      c.http.temperature = it->value("temperature", c.http.temperature);
      c.http.max_tokens = it->value("max_tokens", c.http.max_tokens);
      c.http.max_retries = it->value("max_retries", c.http.max_retries);
      c.http.max_inflight = it->value("max_inflight", c.http.max_inflight);
      c.baseline_temperature = it->value("baseline_temperature", c.baseline_temperature);
    }
    c.out_dir = resolve(base_dir, j.value("out_dir", std::string()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench config: ") + e.what());
  }
  if (c.backend != "mock" && c.backend != "http") throw ConfigError("unknown backend '" + c.backend + "'");
  for (const auto& m : c.methods)
    if (m != "icl" && m != "srvf" && m != "self_consistency")
      throw ConfigError("unknown method '" + m + "'");
  c.loop.validate();
  return c;
}

json BenchConfig::to_json() const {
  json labels_j = {{"names", json::array()}, {"negatives", json::array()}};
  for (const auto& l : labels.labels()) {
    labels_j["names"].push_back(l.name);
    if (l.is_negative) labels_j["negatives"].push_back(l.name);
  }
  return {{"seed", seed},
          {"labels", labels_j},
          {"train", train_path.string()},
          {"test", test_path.string()},
          {"synthetic", {{"train_per_label", synthetic_train_per_label}, {"test_size", synthetic_test_size}}},
          {"methods", methods},
          {"init_demos", {{"strategy", to_string(init_strategy)}, {"count", init_demo_count}, {"file", init_demo_file.string()}}},
          {"loop", {{"max_iters", loop.max_iters}, {"k", loop.k}, {"feedback_demos", loop.feedback_demo_count}, {"fallback", fallback_name(loop.fallback)}}},
          {"collect", {{"di_attempts", collect.di_attempts}, {"lgi_retries", collect.lgi_retries}, {"max_reject_fraction", collect.max_reject_fraction}}},
          {"train_config", {{"epochs", train.epochs}, {"batch_size", train.batch_size}, {"learning_rate", train.learning_rate}, {"tau", train.tau}, {"dim", train.encoder.dim}}},
          {"self_consistency", {{"n", self_consistency_n}}},
          {"backend", {{"type", backend}, {"bias", bias.to_json()}, {"base_url", http.base_url}, {"model", http.model},
                       {"temperature", http.temperature}, {"max_tokens", http.max_tokens}, {"max_retries", http.max_retries},
                       {"max_inflight", http.max_inflight}, {"baseline_temperature", baseline_temperature}}},
          {"out_dir", out_dir.string()}};
}

const MethodResult* EvalReport::find(std::string_view name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

json EvalReport::to_json() const {
  json ms = json::array();
  for (const auto& m : methods) {
    json e = {{"name", m.name}, {"ok", m.ok}};
    if (m.ok) {
      e["micro_f1"] = m.micro_f1;
      e["llm_calls"] = m.efficiency.llm_calls;
      e["corrected_fraction"] = m.efficiency.corrected_fraction;
      e["worst_confusions"] = m.errors.to_json();
    } else {
      e["error"] = m.error;
    }
    ms.push_back(std::move(e));
  }
  return {{"train_size", train_size},
          {"test_size", test_size},
          {"unbiased_rationales", unbiased_rationales},
          {"biased_rationales", biased_rationales},
          {"methods", ms}};
}

json EvalReport::efficiency_json() const {
  json ms = json::object();
  for (const auto& m : methods)
    if (m.ok) ms[m.name] = m.efficiency.to_json();
  return {{"pre_inference", pre_inference.to_json()}, {"methods", ms}};
}

EvalReport run_benchmark(const BenchConfig& cfg, const Logger& logger) {
  std::vector<LabeledSample> train, test;
  if (cfg.train_path.empty() != cfg.test_path.empty())
    throw ConfigError("set both train and test paths, or neither for the synthetic corpus");
  if (!cfg.train_path.empty()) {
    train = load_samples(cfg.train_path, cfg.labels);
    test = load_samples(cfg.test_path, cfg.labels);
  } else {
    const std::size_t n_train = cfg.synthetic_train_per_label * cfg.labels.size();
    auto all = synthetic_sentences_total(cfg.labels, n_train + cfg.synthetic_test_size,
                                         derive_seed(cfg.seed, "synthetic-data"), "sample");
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (i < n_train) {
        all[i].id = "train-" + std::to_string(i);
        train.push_back(std::move(all[i]));
      } else {
        all[i].id = "test-" + std::to_string(i - n_train);
        test.push_back(std::move(all[i]));
      }
    }
  }

  std::unique_ptr<LlmBackend> backend, baseline_backend;
  if (cfg.backend == "mock") {
    auto mock = std::make_unique<MockBackend>(cfg.labels, cfg.bias);
    mock->register_samples(train);
    mock->register_samples(test);
    backend = std::move(mock);
  } else {
    backend = std::make_unique<HttpBackend>(cfg.http);
    HttpConfig b = cfg.http;
    b.temperature = cfg.baseline_temperature;
    baseline_backend = std::make_unique<HttpBackend>(b);
  }
  LlmBackend& baseline = baseline_backend ? *baseline_backend : *backend;

  EvalReport report;
  report.train_size = train.size();
  report.test_size = test.size();

  CallLog pre_log;
  CollectConfig cc = cfg.collect;
  cc.seed = derive_seed(cfg.seed, "collect");
  CollectResult collected = collect(train, *backend, cfg.labels, cc, &pre_log, logger);
  report.unbiased_rationales = collected.store.unbiased().size();
  report.biased_rationales = collected.store.biased().size();

  const bool need_model = std::find(cfg.methods.begin(), cfg.methods.end(), "srvf") != cfg.methods.end() ||
                          cfg.init_strategy == InitDemoStrategy::SimcseLike;
  std::optional<SupervisorModel> model;
  if (need_model) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");
    const auto t0 = std::chrono::steady_clock::now();
    model.emplace(srvf::train(collected.store, tc, nullptr, logger));
    CallRecord rec;
    rec.phase = Phase::PreInference;
    rec.llm_call = false;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pre_log.append(rec);
  }
  report.pre_inference = efficiency_report(pre_log.snapshot());

  const DemoSelector selector(demonstration_pool(collected.store), cfg.init_demo_count, cfg.init_strategy,
                              model ? &*model : nullptr,
                              cfg.init_strategy == InitDemoStrategy::File ? load_demo_file(cfg.init_demo_file)
                                                                          : std::map<std::string, std::vector<std::string>>{});
  std::optional<AnchorIndex> index;
  if (model) index.emplace(AnchorIndex::build(*model, collected.store));

  // Every method starts from the same inference seed, so SRVF's first
  // iteration reproduces the ICL prediction.
  const std::uint64_t inference_seed = derive_seed(cfg.seed, "inference");
  const auto negatives = cfg.labels.negatives();
  for (const auto& name : cfg.methods) {
    MethodResult m;
    m.name = name;
    CallLog log;
    try {
      if (name == "icl") {
        m.predictions = run_icl(test, baseline, selector, cfg.labels, inference_seed, &log, logger);
      } else if (name == "srvf") {
        m.predictions = run_srvf(test, *backend, *model, *index, selector, cfg.labels, cfg.loop,
                                 inference_seed, &log, logger);
      } else {
        m.predictions = run_self_consistency(test, baseline, selector, cfg.labels, cfg.self_consistency_n,
                                             inference_seed, &log, logger);
      }
      const auto aligned = align(test, m.predictions);
      m.micro_f1 = micro_f1(aligned, negatives);
      m.errors = error_matrix(aligned);
      m.efficiency = efficiency_report(log.snapshot());
      m.ok = true;
      logger.info("bench.method_done", {{"method", name}, {"micro_f1", m.micro_f1}});
    } catch (const std::exception& e) {
      m.ok = false;
      m.error = e.what();
      logger.warn("bench.method_failed", {{"method", name}, {"error", e.what()}});
    }
    report.methods.push_back(std::move(m));
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "report.json", report.to_json().dump(2) + "\n");
    write_file(cfg.out_dir / "efficiency.json", report.efficiency_json().dump(2) + "\n");
    for (const auto& m : report.methods) {
      if (!m.ok) continue;
      save_predictions(cfg.out_dir / ("predictions_" + m.name + ".jsonl"), m.predictions);
      write_file(cfg.out_dir / ("errors_" + m.name + ".csv"), m.errors.to_csv(cfg.labels));
    }
  }
  return report;
}

}  // namespace srvf
