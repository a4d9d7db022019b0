#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enc/train.hpp"

namespace enc {

/// One (setting, variant) cell of an ablation study, per-seed tests in seed
/// order.
struct AblationRow {
  std::string setting;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  std::vector<double> test;
  double mean_test = 0;
  double std_test = 0;
};

inline constexpr std::string_view kStudies[] = {"loss-influence", "fixed-vs-random", "tv-vs-preg", "depth-sweep"};

/// Labelled nodes per class in {10, 20, ..., 100}; variants ce, ce+mi, ce+tv,
/// ce+cvg and enc (weights from `hp`). Splits are drawn per seed with 500 val
/// and 1000 test nodes; a budget larger than the smallest class is skipped.
std::vector<AblationRow> ablate_loss_influence(const Dataset& ds, const Hyperparams& hp,
                                               std::span<const std::uint64_t> seeds, int jobs,
                                               std::vector<int> per_class = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100});

/// ENC with a fresh partition each epoch ("random") against one partition per
/// run ("fixed"); each seed gives a different fixed partition.
std::vector<AblationRow> ablate_partition_policy(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                                 std::span<const std::uint64_t> seeds, int jobs);

/// CE-only GCN against CE plus exactly one smoothness term: basic TV, edge-aware
/// TV and P-reg. TV uses hp.beta (1 when zero). P-reg uses hp.preg_weight,
/// or beta / n when zero so both terms are per-element averages.
std::vector<AblationRow> ablate_tv_vs_preg(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                           std::span<const std::uint64_t> seeds, int jobs);

/// Baseline (CE only) and ENC at each depth.
std::vector<AblationRow> ablate_depth(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                      std::span<const std::uint64_t> seeds, int jobs,
                                      std::vector<int> depths = {2, 4, 8, 16, 32, 64});

/// Dispatches on a kStudies name; throws std::invalid_argument otherwise.
std::vector<AblationRow> run_study(std::string_view study, const Dataset& ds, const std::string& split,
                                   const Hyperparams& hp, std::span<const std::uint64_t> seeds, int jobs);

/// Hyperparameters with the ENC weights cleared.
Hyperparams ce_only(Hyperparams hp);

/// Columns: setting,variant,seeds,mean_test,std_test,tests (';'-separated).
void write_ablation_csv(const std::filesystem::path& file, std::span<const AblationRow> rows);

}  // namespace enc
