#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srvf/core.hpp"
#include "srvf/features.hpp"
#include "srvf/log.hpp"

namespace srvf {

inline constexpr double kDefaultTau = 0.2;

// The rationale supervisor: a hashed-feature encoder followed by a linear
// projection (dim x feature_space). Columns of the projection that training
// never touched are not stored; they are regenerated on demand from
// `init_seed` (uniform entries with variance 1/dim).
class SupervisorModel {
 public:
  SupervisorModel(EncoderConfig config, double tau, std::uint64_t init_seed = 0);

  const EncoderConfig& config() const noexcept { return config_; }
  double tau() const noexcept { return tau_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }
  std::size_t dim() const noexcept { return config_.dim; }

  // Initial value of projection entry (row, col).
  double initial_weight(std::size_t row, std::uint32_t col) const;
  // Column `col` (length dim), stored or generated.
  void column(std::uint32_t col, std::span<double> out) const;
  // Pointer to a stored column, or nullptr.
  const double* stored_column(std::uint32_t col) const;
  // Stores the column (initializing it when absent) and returns it.
  std::span<double> mutable_column(std::uint32_t col);
  void materialize_all();
  std::size_t stored_columns() const noexcept { return slots_.size(); }
  // Stored column ids in ascending order.
  std::vector<std::uint32_t> stored_column_ids() const;

  // Projection of the features, before normalization.
  void project(const SparseFeatures& f, std::span<double> out) const;
  // R_gamma(text). Unit length when config().normalize. Throws DataError on
  // empty text.
  std::vector<double> embed(std::string_view text) const;

 private:
  EncoderConfig config_;
  double tau_;
  std::uint64_t init_seed_;
  std::unordered_map<std::uint32_t, std::size_t> slots_;
  std::vector<double> data_;  // stored columns, `dim` values each
};

double dot(std::span<const double> a, std::span<const double> b);
// In-place unit normalization; zero vectors are left unchanged. Returns the
// original norm.
double normalize_in_place(std::span<double> v);

// Dot product of the two embeddings.
double sim(const SupervisorModel& model, std::string_view r1, std::string_view r2);

// ---- contrastive pairs --------------------------------------------------------------

enum class PairClass {
  SameGoldUnbiased,           // positive
  SameBiasSituation,          // positive
  SameSampleBiasedVsUnbiased, // negative
  DifferentBiasSituations,    // negative
};
bool is_positive(PairClass c);
std::string_view to_string(PairClass c);

// Class of an unordered pair of rationales with the given gold labels, or
// nullopt when the pair belongs to no class.
std::optional<PairClass> classify_pair(const Rationale& a, const RelationLabel& gold_a,
                                       const Rationale& b, const RelationLabel& gold_b);

struct RationalePair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  PairClass cls = PairClass::SameGoldUnbiased;
};

struct PairBatch {
  std::vector<Rationale> rationales;  // R_u followed by R_b
  std::vector<RelationLabel> golds;   // gold label of each rationale's sample
  std::vector<RationalePair> pos;
  std::vector<RationalePair> neg;
};

struct PairSamplerConfig {
  // Above this many candidate pairs, pairs are sampled instead of enumerated.
  std::size_t enumeration_cutoff = 1'000'000;
  std::size_t per_class_quota = 50'000;
  std::uint64_t seed = 0;
};

// All pairs of the four classes (a < b), or a seeded uniform sample of each
// class above the cutoff. Empty classes are reported through `logger`.
PairBatch build_pairs(const RationaleStore& store, const PairSamplerConfig& cfg = {},
                      const Logger& logger = {});

// ---- loss --------------------------------------------------------------------------

// -log[(1/|pos|) sum_pos exp(s/tau) / sum_{pos,neg} exp(s/tau)], evaluated with
// log-sum-exp. Throws Error when `pos_sims` is empty.
double contrastive_loss_from_sims(std::span<const double> pos_sims,
                                  std::span<const double> neg_sims, double tau);

double contrastive_loss(const SupervisorModel& model, const PairBatch& batch);

// Gradient of the loss over a subset of the batch's pairs with respect to the
// projection columns it touches.
struct LossGradient {
  double loss = 0.0;
  std::unordered_map<std::uint32_t, std::vector<double>> columns;
};

LossGradient contrastive_loss_grad(const SupervisorModel& model,
                                   const std::vector<SparseFeatures>& features,
                                   std::span<const RationalePair> pos,
                                   std::span<const RationalePair> neg);

// ---- training ----------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-2;
  double tau = kDefaultTau;
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  PairSamplerConfig pairs;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
};

// Minibatch gradient descent on the projection. Each epoch shuffles the
// rationales into blocks of batch_size; a batch is every pair whose two
// rationales share a block. Batches without positives are skipped. Throws Error on a non-finite loss or when the store
// yields no positive pair.
SupervisorModel train(const RationaleStore& store, const TrainConfig& cfg,
                      TrainReport* report = nullptr, const Logger& logger = {});

// Continues training an existing model.
void train_in_place(SupervisorModel& model, const PairBatch& batch, const TrainConfig& cfg,
                    TrainReport* report = nullptr, const Logger& logger = {});

// ---- checkpoint --------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

std::string serialize_model(const SupervisorModel& model);
// Throws CheckpointError on corrupt input, version mismatch or invalid
// values (tau <= 0, non-finite weights).
SupervisorModel deserialize_model(std::string_view json_text);
void save_model(const SupervisorModel& model, const std::filesystem::path& path);
SupervisorModel load_model(const std::filesystem::path& path);

}  // namespace srvf
