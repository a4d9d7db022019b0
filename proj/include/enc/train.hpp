#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "enc/dataset.hpp"
#include "enc/losses.hpp"
#include "enc/model.hpp"
#include "enc/operators.hpp"

namespace enc {

enum class PartitionPolicy { Random, Fixed };

std::string_view to_string(PartitionPolicy p);
PartitionPolicy parse_partition_policy(std::string_view name);

struct Hyperparams {
  double lr_gnn = 0.01;
  double lr_oc = 0.01;
  double wd_gnn = 5e-4;
  double wd_oc = 5e-4;
  int channels = 64;
  double dropout = 0.5;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lambda = 2.0;
  double sigma = 10.0;
  int layers = 2;
  Backbone backbone = Backbone::Gcn;
  int max_epochs = 1500;
  int patience = 100;
  std::uint64_t seed = 0;
  bool tv_edge_aware = true;
  double preg_weight = 0.0;
  /// Random: a fresh labelled-set partition every epoch. Fixed: one partition
  /// drawn at the start of training and reused.
  PartitionPolicy partition = PartitionPolicy::Random;
  bool stratify_partition = false;
  int gat_heads = 1;
  double gcnii_alpha = 0.1;
  double gcnii_theta = 0.5;

  /// Throws std::invalid_argument unless rates > 0, decays >= 0 and the rest
  /// is in range.
  void validate() const;

  [[nodiscard]] ModelConfig model_config(int in_channels, int classes) const;
  [[nodiscard]] LossConfig loss_config() const;

  /// One "key=value" line per field, in declaration order.
  [[nodiscard]] std::string to_kv() const;
  /// FNV-1a 64 of to_kv() without the seed, as 16 hex digits.
  [[nodiscard]] std::string config_hash() const;
};

/// Sets a field from its to_kv() key. Throws std::invalid_argument for an
/// unknown key or an unparsable value.
void set_field(Hyperparams& hp, std::string_view key, std::string_view value);

/// Inverse of Hyperparams::to_kv (unknown keys are an error, blank lines ok).
Hyperparams parse_kv(std::string_view text);

/// Distinct RNG streams derived from one seed. Stream 0 initialises the model,
/// 1 drives dropout, 2 draws partitions.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct AdamGroup {
  double lr = 0.01;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long long t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One bias-corrected Adam update of a single tensor with coupled L2 decay
/// (g + wd * theta). `t` is the 1-based step count.
void adam_update(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v, long long t, double lr,
                 double weight_decay, double beta1 = kAdamBeta1, double beta2 = kAdamBeta2, double eps = kAdamEps);

/// Adam over a parameter list; opening/closing and GNN parameters take their
/// own group settings. Increments state.t.
void adam_step(std::vector<Parameter>& params, std::span<const Matrix> grads, AdamState& state,
               const AdamGroup& gnn, const AdamGroup& open_close);

/// Loss became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, const std::string& what);
  [[nodiscard]] int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  double train_acc = 0;
  double val_acc = 0;
  double test_acc = 0;
  double val_loss = 0;
  double train_ms = 0;
  double eval_ms = 0;
};

struct TrainResult {
  double best_val_acc = 0;
  double best_val_loss = 0;
  double test_acc_at_best_val = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  int cvg_degenerate_steps = 0;
  double runtime_s = 0;
  std::vector<EpochRecord> curve;
  /// Parameters at the best-validation epoch.
  std::vector<Parameter> best_params;
};

/// Fraction of `ids` whose row argmax equals the label; 0 for an empty list.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> ids);

/// Mean cross-entropy of `ids` computed directly on values.
double cross_entropy_value(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> ids);

/// Full-batch training state for one run. step() performs one epoch: draw a
/// partition if needed, a train-mode forward, the total loss, backward, an
/// Adam update, then eval-mode accuracies with the updated parameters.
class Trainer {
 public:
  Trainer(const Dataset& ds, Split split, const Hyperparams& hp);

  EpochRecord step();
  /// Runs until max_epochs or early stopping.
  TrainResult run(const std::function<void(const EpochRecord&)>& on_epoch = {});

  [[nodiscard]] const Model& model() const { return model_; }
  [[nodiscard]] Model& model() { return model_; }
  [[nodiscard]] const Split& split() const { return split_; }
  [[nodiscard]] const Hyperparams& hyperparams() const { return hp_; }
  [[nodiscard]] const Partition& last_partition() const { return partition_; }
  [[nodiscard]] int epoch() const { return epoch_; }

 private:
  const Dataset& ds_;
  Split split_;
  Hyperparams hp_;
  GraphOperators ops_;
  Matrix boundary_;
  Rng init_rng_;
  Rng dropout_rng_;
  Rng partition_rng_;
  Model model_;
  AdamState adam_;
  Partition partition_;
  LossConfig loss_cfg_;
  int epoch_ = 0;
  int degenerate_ = 0;
};

TrainResult train(const Dataset& ds, const Split& split, const Hyperparams& hp);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
};

struct RepeatedResult {
  std::vector<SeedRun> runs;  // sorted by seed
  double mean_test = 0;
  double std_test = 0;  // sample standard deviation, 0 for one run
  double mean_val = 0;
};

/// Split used for one seed: "geom" maps to "geom-<seed mod 10>", anything else
/// goes through resolve_split.
Split split_for_seed(const Dataset& ds, const std::string& split_name, std::uint64_t seed);

/// Trains once per seed (hp.seed replaced) on up to `jobs` threads.
/// Aggregates over runs sorted by seed, so the seed order does not matter.
RepeatedResult run_repeated(const Dataset& ds, const std::string& split_name, Hyperparams hp,
                            std::span<const std::uint64_t> seeds, int jobs = 1);

using SplitFn = std::function<Split(std::uint64_t seed)>;

/// As above with the split for each seed supplied by `split_for`.
RepeatedResult run_repeated(const Dataset& ds, const SplitFn& split_for, Hyperparams hp,
                            std::span<const std::uint64_t> seeds, int jobs = 1);

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(std::span<const double> xs);

struct GridAxis {
  std::string key;  // a Hyperparams::to_kv key
  std::vector<std::string> values;
};

struct GridEntry {
  Hyperparams hp;
  bool ok = false;
  double val_acc = 0;
  double test_acc = 0;
  std::string error;
};

struct GridResult {
  std::vector<GridEntry> ledger;  // grid order
  std::size_t best_index = 0;
  [[nodiscard]] const GridEntry& best() const { return ledger.at(best_index); }
};

/// Cartesian product of the axes, last axis fastest. Each point is averaged
/// over `seeds`. The best point has the highest mean val accuracy; ties go to
/// the earlier point. Diverging points stay in the ledger with ok = false.
/// Throws std::invalid_argument for an empty grid and std::runtime_error when
/// every point fails.
GridResult grid_search(const Dataset& ds, const std::string& split_name, const Hyperparams& base,
                       std::span<const GridAxis> axes, std::span<const std::uint64_t> seeds, int jobs = 1);

void write_grid_ledger(const std::filesystem::path& file, const GridResult& grid);

struct TimingConfig {
  std::string label;
  Hyperparams hp;
};

struct TimingRow {
  std::string label;
  double train_ms = 0;  // median per-epoch training time
  double infer_ms = 0;  // median eval-mode forward time
  double test_acc = 0;  // after the last epoch
};

/// Runs all configurations side by side, one epoch of each in turn, for
/// `warmup + epochs` epochs without early stopping; medians exclude the
/// warm-up epochs.
std::vector<TimingRow> timing_report(const Dataset& ds, const Split& split, std::span<const TimingConfig> configs,
                                     int epochs = 50, int warmup = 5);

/// Per-epoch metrics: epoch,l_total,l_ce,l_mi,l_tv,l_cvg,train_acc,val_acc,test_acc,epoch_ms.
void write_metrics_csv(const std::filesystem::path& file, const TrainResult& result);

/// Appends rows "config_hash,seed,best_val,test,runtime" to a summary CSV,
/// writing the header when the file is new. Safe to share between threads.
class SummaryWriter {
 public:
  explicit SummaryWriter(std::filesystem::path file);
  void append(const std::string& config_hash, std::uint64_t seed, const TrainResult& result);

 private:
  std::filesystem::path file_;
  std::mutex mutex_;
};

void write_run_config(const std::filesystem::path& file, const Hyperparams& hp, std::string_view dataset,
                      std::string_view split);

}  // namespace enc
