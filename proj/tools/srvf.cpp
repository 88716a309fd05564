// srvf: command-line front end.
//
//   srvf collect | train | run | eval | sample-kshot | bench | synth
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure. Logs are JSON
// lines on stderr.

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "srvf/bench.hpp"
#include "srvf/collection.hpp"
#include "srvf/error.hpp"
#include "srvf/eval.hpp"
#include "srvf/feedback.hpp"
#include "srvf/http_backend.hpp"
#include "srvf/mock_backend.hpp"
#include "srvf/supervisor.hpp"
#include "srvf/synthetic.hpp"

using nlohmann::json;
using namespace srvf;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One flag whose value may also come from the config file.
struct Binding {
  std::string key;
  CLI::Option* opt;
  std::function<json()> get;
  std::function<void(const json&)> set;
};

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& desc)
      : app_(parent.add_subcommand(name, desc)), name_(name) {
    app_->add_option("--config", config_path_, "JSON configuration file");
    app_->add_flag("--print-config", print_config_, "Print the resolved configuration and exit");
  }

  template <typename T>
  CLI::Option* bind(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
      opt = app_->add_flag("--" + flag, var, desc);
    else
      opt = app_->add_option("--" + flag, var, desc)->capture_default_str();
    bindings_.push_back({flag, opt, [&var] { return json(var); },
                         [&var](const json& j) { var = j.get<T>(); }});
    return opt;
  }

  void require(std::initializer_list<std::string> keys) { required_.insert(required_.end(), keys); }

  CLI::App* app() const { return app_; }
  const std::string& config_path() const { return config_path_; }

  // Fills unset flags from the config file (top level, then the section
  // named after the subcommand) and checks required values.
  void resolve() {
    if (!config_path_.empty()) {
      json file;
      try {
        file = json::parse(read_file(config_path_));
      } catch (const json::exception& e) {
        throw ConfigError("config file '" + config_path_ + "': " + e.what());
      }
      if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
      for (auto& b : bindings_) {
        if (b.opt->count() > 0) continue;
        const json* v = nullptr;
        if (auto it = file.find(b.key); it != file.end()) v = &*it;
        if (auto sec = file.find(name_); sec != file.end() && sec->is_object())
          if (auto it = sec->find(b.key); it != sec->end()) v = &*it;
        if (!v) continue;
        try {
          b.set(*v);
          from_file_.push_back(b.key);
        } catch (const json::exception& e) {
          throw ConfigError("config key '" + b.key + "': " + e.what());
        }
      }
    }
    for (const auto& key : required_) {
      auto b = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding& x) { return x.key == key; });
      const bool set = b->opt->count() > 0 ||
                       std::find(from_file_.begin(), from_file_.end(), key) != from_file_.end();
      if (!set) throw UsageError(name_ + ": --" + key + " is required");
    }
  }

  bool print_config() const {
    if (!print_config_) return false;
    json out = json::object();
    for (const auto& b : bindings_) out[b.key] = b.get();
    std::cout << out.dump(2) << "\n";
    return true;
  }

 private:
  CLI::App* app_;
  std::string name_;
  std::string config_path_;
  bool print_config_ = false;
  std::vector<Binding> bindings_;
  std::vector<std::string> required_;
  std::vector<std::string> from_file_;
};

LabelSet load_labels(const std::string& spec) {
  if (spec.empty() || spec == "semeval") return LabelSet::semeval();
  try {
    const json j = json::parse(read_file(spec));
    return LabelSet(j.at("names").get<std::vector<std::string>>(),
                    j.value("negatives", std::vector<std::string>{}));
  } catch (const json::exception& e) {
    throw ConfigError("label file '" + spec + "': " + e.what());
  }
}

struct BackendFlags {
  std::string llm = "mock";
  std::string bias;
  std::string base_url;
  std::string model_name = HttpConfig{}.model;
  double temperature = 1.0;
  int max_inflight = 4;

  void bind(Command& c) {
    c.bind("llm", llm, "Backend: mock or http")->check(CLI::IsMember({"mock", "http"}));
    c.bind("bias", bias, "Bias model JSON for the mock backend");
    c.bind("endpoint", base_url, "Chat completions endpoint prefix (http)");
    c.bind("model-name", model_name, "Model name sent to the endpoint (http)");
    c.bind("temperature", temperature, "Sampling temperature (http)");
    c.bind("max-inflight", max_inflight, "Concurrent requests (http) and worker threads");
  }

  std::unique_ptr<LlmBackend> make(const LabelSet& labels, const std::vector<LabeledSample>& known) const {
    if (llm == "mock") {
      BiasModel bias;
      if (!this->bias.empty()) {
        try {
          bias = BiasModel::from_json(json::parse(read_file(this->bias)));
        } catch (const json::exception& e) {
          throw ConfigError("bias file '" + this->bias + "': " + e.what());
        }
      }
      auto mock = std::make_unique<MockBackend>(labels, bias);
      mock->register_samples(known);
      return mock;
    }
    HttpConfig h;
    h.base_url = base_url;
    h.model = model_name;
    h.temperature = temperature;
    h.max_inflight = max_inflight;
    return std::make_unique<HttpBackend>(h);
  }
};

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rationale-supervised relation extraction toolkit"};
  app.require_subcommand(1);
  const Logger logger = Logger::stderr_json();

  // collect
  Command collect_cmd(app, "collect", "Collect unbiased and biased rationales");
  std::string c_data, c_out, c_labels = "semeval";
  std::size_t c_di = 3, c_lgi = 2;
  std::uint64_t c_seed = 0;
  BackendFlags c_backend;
  collect_cmd.bind("data", c_data, "Labeled samples (JSONL)");
  collect_cmd.bind("out", c_out, "Rationale store to write (JSONL)");
  collect_cmd.bind("labels", c_labels, "semeval or a label JSON file");
  collect_cmd.bind("di-attempts", c_di, "Diversified-intervention attempts per sample");
  collect_cmd.bind("lgi-retries", c_lgi, "Label-guided intervention retries");
  collect_cmd.bind("seed", c_seed, "Seed");
  c_backend.bind(collect_cmd);
  collect_cmd.require({"data", "out"});

  // train
  Command train_cmd(app, "train", "Train the rationale supervisor");
  std::string t_rationales, t_data, t_out, t_labels = "semeval";
  TrainConfig t_cfg;
  train_cmd.bind("rationales", t_rationales, "Rationale store (JSONL)");
  train_cmd.bind("data", t_data, "Labeled samples for stores without inline samples");
  train_cmd.bind("out", t_out, "Checkpoint to write");
  train_cmd.bind("labels", t_labels, "semeval or a label JSON file");
  train_cmd.bind("tau", t_cfg.tau, "Temperature of the contrastive loss");
  train_cmd.bind("epochs", t_cfg.epochs, "Epochs");
  train_cmd.bind("batch", t_cfg.batch_size, "Rationales per batch");
  train_cmd.bind("lr", t_cfg.learning_rate, "Learning rate");
  train_cmd.bind("dim", t_cfg.encoder.dim, "Embedding width");
  train_cmd.bind("seed", t_cfg.seed, "Seed");
  train_cmd.require({"rationales", "out"});

  // run
  Command run_cmd(app, "run", "Predict with verification and feedback");
  std::string r_test, r_model, r_store, r_data, r_out, r_labels = "semeval", r_init = "random",
                                                        r_demo_file, r_method = "srvf", r_eff_out;
  LoopConfig r_loop;
  std::size_t r_init_count = 10, r_sc_n = 5;
  std::uint64_t r_seed = 0;
  BackendFlags r_backend;
  run_cmd.bind("test", r_test, "Test samples (JSONL)");
  run_cmd.bind("model", r_model, "Supervisor checkpoint");
  run_cmd.bind("store", r_store, "Rationale store (JSONL)");
  run_cmd.bind("data", r_data, "Labeled samples for stores without inline samples");
  run_cmd.bind("out", r_out, "Predictions to write (JSONL)");
  run_cmd.bind("labels", r_labels, "semeval or a label JSON file");
  run_cmd.bind("method", r_method, "srvf, icl or self_consistency")
      ->check(CLI::IsMember({"srvf", "icl", "self_consistency"}));
  run_cmd.bind("max-iters", r_loop.max_iters, "Feedback iterations");
  run_cmd.bind("k", r_loop.k, "Biased anchors retrieved per feedback round");
  run_cmd.bind("feedback-demos", r_loop.feedback_demo_count, "Feedback demonstrations per prompt");
  run_cmd.bind("init-demos", r_init, "random, simcse-like or file")
      ->check(CLI::IsMember({"random", "simcse-like", "file"}));
  run_cmd.bind("init-demo-count", r_init_count, "Initial demonstrations per prompt");
  run_cmd.bind("demo-file", r_demo_file, "JSON {sample_id: [pool ids]} for --init-demos file");
  run_cmd.bind("sc-candidates", r_sc_n, "Self-consistency candidates");
  run_cmd.bind("efficiency-out", r_eff_out, "Efficiency report to write (JSON)");
  run_cmd.bind("seed", r_seed, "Seed");
  r_backend.bind(run_cmd);
  run_cmd.require({"test", "model", "store", "out"});

  // eval
  Command eval_cmd(app, "eval", "Score predictions");
  std::string e_pred, e_gold, e_out, e_errors, e_labels = "semeval";
  std::vector<std::string> e_negatives;
  eval_cmd.bind("pred", e_pred, "Predictions (JSONL)");
  eval_cmd.bind("gold", e_gold, "Gold samples (JSONL)");
  eval_cmd.bind("negatives", e_negatives, "Negative labels (default: those of the label set)");
  eval_cmd.bind("labels", e_labels, "semeval or a label JSON file");
  eval_cmd.bind("out", e_out, "Report to write (JSON); stdout when empty");
  eval_cmd.bind("errors-csv", e_errors, "Error matrix to write (CSV)");
  eval_cmd.require({"pred", "gold"});

  // sample-kshot
  Command kshot_cmd(app, "sample-kshot", "Draw a k-shot training subset");
  std::string k_data, k_out, k_labels = "semeval";
  std::size_t k_k = 5;
  std::uint64_t k_seed = 0;
  bool k_doc = false;
  kshot_cmd.bind("data", k_data, "Full training set (JSONL)");
  kshot_cmd.bind("out", k_out, "Subset to write (JSONL)");
  kshot_cmd.bind("k", k_k, "Instances per relation label");
  kshot_cmd.bind("seed", k_seed, "Seed");
  kshot_cmd.bind("doc-level", k_doc, "Documents with greedy triplet sampling");
  kshot_cmd.bind("labels", k_labels, "Label JSON file (relation set for --doc-level)");
  kshot_cmd.require({"data", "out"});

  // bench
  Command bench_cmd(app, "bench", "Run the method comparison described by a bench config");
  std::string b_out_dir;
  std::uint64_t b_seed = 0;
  bench_cmd.bind("out-dir", b_out_dir, "Report directory (overrides the config)");
  bench_cmd.bind("seed", b_seed, "Master seed (overrides the config)");

  // synth
  Command synth_cmd(app, "synth", "Write a synthetic corpus");
  std::string s_kind = "sentences", s_out, s_prefix = "sample", s_bias_out;
  std::size_t s_count = 100;
  std::uint64_t s_seed = 0;
  synth_cmd.bind("kind", s_kind, "sentences or documents")->check(CLI::IsMember({"sentences", "documents"}));
  synth_cmd.bind("count", s_count, "Number of samples or documents");
  synth_cmd.bind("prefix", s_prefix, "Id prefix");
  synth_cmd.bind("seed", s_seed, "Seed");
  synth_cmd.bind("out", s_out, "File to write (JSONL)");
  synth_cmd.bind("bias-out", s_bias_out, "Also write the synthetic bias model (JSON)");
  synth_cmd.require({"out"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::vector<Command*> commands = {&collect_cmd, &train_cmd, &run_cmd, &eval_cmd,
                                          &kshot_cmd, &bench_cmd, &synth_cmd};
  Command* cmd = nullptr;
  for (auto* c : commands)
    if (c->app()->parsed()) cmd = c;

  try {
    // bench reads --config as the bench file, not as flag defaults.
    if (cmd != &bench_cmd) cmd->resolve();
    if (cmd->print_config() && cmd != &bench_cmd) return 0;

    if (cmd == &collect_cmd) {
      set_threads(c_backend.max_inflight);
      const LabelSet labels = load_labels(c_labels);
      const auto samples = load_samples(c_data, labels);
      auto backend = c_backend.make(labels, samples);
      CollectConfig cc;
      cc.di_attempts = c_di;
      cc.lgi_retries = c_lgi;
      cc.seed = c_seed;
      const CollectResult r = collect(samples, *backend, labels, cc, nullptr, logger);
      for (const auto& f : r.failures) logger.warn("collect.failure", {{"detail", f}});
      save_store(c_out, r.store);
      logger.info("collect.done", {{"unbiased", r.store.unbiased().size()},
                                   {"biased", r.store.biased().size()},
                                   {"rejected", r.rejected.size()}});
    } else if (cmd == &train_cmd) {
      const LabelSet labels = load_labels(t_labels);
      const auto samples = t_data.empty() ? std::vector<LabeledSample>{} : load_samples(t_data, labels);
      const RationaleStore store = load_store(t_rationales, samples, labels);
      TrainReport report;
      const SupervisorModel model = train(store, t_cfg, &report, logger);
      save_model(model, t_out);
      logger.info("train.done", {{"positive_pairs", report.positive_pairs},
                                 {"negative_pairs", report.negative_pairs},
                                 {"final_loss", report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()}});
    } else if (cmd == &run_cmd) {
      set_threads(r_backend.max_inflight);
      const LabelSet labels = load_labels(r_labels);
      const auto test = load_samples(r_test, labels);
      const auto samples = r_data.empty() ? std::vector<LabeledSample>{} : load_samples(r_data, labels);
      const RationaleStore store = load_store(r_store, samples, labels);
      const SupervisorModel model = load_model(r_model);
      std::vector<LabeledSample> known = test;
      known.insert(known.end(), store.samples().begin(), store.samples().end());
      auto backend = r_backend.make(labels, known);
      const auto strategy = parse_init_demo_strategy(r_init);
      if (strategy == InitDemoStrategy::File && r_demo_file.empty())
        throw UsageError("run: --init-demos file needs --demo-file");
      const DemoSelector selector(demonstration_pool(store), r_init_count, strategy, &model,
                                  strategy == InitDemoStrategy::File ? load_demo_file(r_demo_file)
                                                                     : std::map<std::string, std::vector<std::string>>{});
      CallLog log;
      std::vector<Prediction> preds;
      if (r_method == "srvf") {
        const AnchorIndex index = AnchorIndex::build(model, store);
        preds = run_srvf(test, *backend, model, index, selector, labels, r_loop, r_seed, &log, logger);
      } else if (r_method == "icl") {
        preds = run_icl(test, *backend, selector, labels, r_seed, &log, logger);
      } else {
        preds = run_self_consistency(test, *backend, selector, labels, r_sc_n, r_seed, &log, logger);
      }
      save_predictions(r_out, preds);
      if (!r_eff_out.empty())
        write_file(r_eff_out, efficiency_report(log.snapshot()).to_json().dump(2) + "\n");
      logger.info("run.done", {{"predictions", preds.size()}, {"llm_calls", log.size()}});
    } else if (cmd == &eval_cmd) {
      const LabelSet labels = load_labels(e_labels);
      const auto gold = load_samples(e_gold, labels);
      const auto preds = load_predictions(e_pred, labels);
      std::vector<RelationLabel> negatives;
      if (e_negatives.empty()) {
        negatives = labels.negatives();
      } else {
        for (const auto& n : e_negatives) negatives.push_back(labels.at(n));
      }
      const auto aligned = align(gold, preds);
      const F1Counts c = count_f1(aligned, negatives);
      const ErrorMatrix m = error_matrix(aligned);
      const json report = {{"micro_f1", micro_f1(aligned, negatives)},
                           {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn},
                           {"samples", aligned.size()},
                           {"worst_confusions", m.to_json()}};
      if (e_out.empty())
        std::cout << report.dump(2) << "\n";
      else
        write_file(e_out, report.dump(2) + "\n");
      if (!e_errors.empty()) write_file(e_errors, m.to_csv(labels));
    } else if (cmd == &kshot_cmd) {
      if (k_doc) {
        if (k_labels == "semeval") throw UsageError("sample-kshot: --doc-level needs --labels <relation file>");
        const LabelSet relations = load_labels(k_labels);
        const auto docs = load_documents(k_data, relations);
        const std::size_t positive = relations.size() - relations.negatives().size();
        const KshotDocuments r = sample_kshot_document(docs, k_k, positive, k_seed, logger);
        save_documents(k_out, r.docs);
        logger.info("kshot.done", {{"docs", r.docs.size()}, {"q", r.q}, {"exhausted", r.exhausted}});
      } else {
        const LabelSet labels = load_labels(k_labels);
        const auto data = load_samples(k_data, labels);
        const auto out = sample_kshot_sentence(data, k_k, k_seed, logger);
        save_samples(k_out, out);
        logger.info("kshot.done", {{"samples", out.size()}});
      }
    } else if (cmd == &bench_cmd) {
      if (bench_cmd.config_path().empty()) throw UsageError("bench: --config is required");
      const std::filesystem::path path = bench_cmd.config_path();
      json j;
      try {
        j = json::parse(read_file(path));
      } catch (const json::exception& e) {
        throw ConfigError("bench config '" + path.string() + "': " + e.what());
      }
      BenchConfig cfg = BenchConfig::from_json(j, path.parent_path());
      if (bench_cmd.app()->count("--seed")) cfg.seed = b_seed;
      if (!b_out_dir.empty()) cfg.out_dir = b_out_dir;
      if (bench_cmd.app()->count("--print-config")) {
        std::cout << cfg.to_json().dump(2) << "\n";
        return 0;
      }
      set_threads(cfg.http.max_inflight);
      const EvalReport report = run_benchmark(cfg, logger);
      logger.info("bench.done", report.to_json());
      for (const auto& m : report.methods)
        if (!m.ok) return 2;
    } else if (cmd == &synth_cmd) {
      if (s_kind == "sentences") {
        save_samples(s_out, synthetic_sentences_total(LabelSet::semeval(), s_count, s_seed, s_prefix));
      } else {
        save_documents(s_out, synthetic_documents(s_count, s_seed, s_prefix));
      }
      if (!s_bias_out.empty()) write_file(s_bias_out, synthetic_bias().to_json().dump(2) + "\n");
    }
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n" << cmd->app()->help();
    return 1;
  } catch (const std::exception& e) {
    logger.error("failed", {{"message", e.what()}});
    return 2;
  }
  return 0;
}
