#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srvf/collection.hpp"
#include "srvf/eval.hpp"
#include "srvf/feedback.hpp"
#include "srvf/http_backend.hpp"
#include "srvf/mock_backend.hpp"
#include "srvf/supervisor.hpp"

namespace srvf {

struct BenchConfig {
  std::uint64_t seed = 0;
  LabelSet labels = LabelSet::semeval();
  // Data files, or the synthetic corpus when both are empty.
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::size_t synthetic_train_per_label = 20;
  std::size_t synthetic_test_size = 500;
  std::vector<std::string> methods = {"icl", "srvf"};
  InitDemoStrategy init_strategy = InitDemoStrategy::Random;
  std::size_t init_demo_count = 10;
  std::filesystem::path init_demo_file;
  LoopConfig loop;
  CollectConfig collect;
  TrainConfig train;
  std::size_t self_consistency_n = 5;
  std::string backend = "mock";  // mock | http
  BiasModel bias;
  HttpConfig http;
  double baseline_temperature = 0.7;
  std::filesystem::path out_dir;

  // Reads bench.json. Relative paths resolve against `base_dir`.
  static BenchConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;
};

struct MethodResult {
  std::string name;
  bool ok = false;
  std::string error;
  double micro_f1 = 0.0;
  std::vector<Prediction> predictions;
  ErrorMatrix errors;
  EfficiencyReport efficiency;
};

struct EvalReport {
  std::vector<MethodResult> methods;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t unbiased_rationales = 0;
  std::size_t biased_rationales = 0;
  EfficiencyReport pre_inference;
  const MethodResult* find(std::string_view name) const;
  // Deterministic summary: no timings.
  nlohmann::json to_json() const;
  // Wall-clock timings per method.
  nlohmann::json efficiency_json() const;
};

// Collects rationales on the training set, trains the supervisor and runs
// every configured method over the test set. A failing method is reported
// and the others still run. With out_dir set, writes report.json,
// efficiency.json, predictions_<method>.jsonl and errors_<method>.csv.
EvalReport run_benchmark(const BenchConfig& cfg, const Logger& logger = {});

}  // namespace srvf
