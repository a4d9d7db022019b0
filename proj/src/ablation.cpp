#include "enc/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace enc {

namespace {

AblationRow summarize(std::string setting, std::string variant, const RepeatedResult& r) {
  AblationRow row;
  row.setting = std::move(setting);
  row.variant = std::move(variant);
  for (const SeedRun& run : r.runs) {
    row.seeds.push_back(run.seed);
    row.test.push_back(run.result.test_acc_at_best_val);
  }
  row.mean_test = r.mean_test;
  row.std_test = r.std_test;
  return row;
}

double tv_weight(const Hyperparams& hp) { return hp.beta > 0 ? hp.beta : 1.0; }

}  // namespace

Hyperparams ce_only(Hyperparams hp) {
  hp.alpha = 0;
  hp.beta = 0;
  hp.gamma = 0;
  hp.preg_weight = 0;
  return hp;
}

std::vector<AblationRow> ablate_loss_influence(const Dataset& ds, const Hyperparams& hp,
                                               std::span<const std::uint64_t> seeds, int jobs,
                                               std::vector<int> per_class) {
  std::vector<int> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  const int smallest = *std::min_element(counts.begin(), counts.end());

  const Hyperparams base = ce_only(hp);
  std::vector<std::pair<std::string, Hyperparams>> variants = {{"ce", base}};
  {
    Hyperparams v = base;
    v.alpha = hp.alpha;
    variants.emplace_back("ce+mi", v);
  }
  {
    Hyperparams v = base;
    v.beta = hp.beta;
    variants.emplace_back("ce+tv", v);
  }
  {
    Hyperparams v = base;
    v.gamma = hp.gamma;
    variants.emplace_back("ce+cvg", v);
  }
  variants.emplace_back("enc", hp);

  std::vector<AblationRow> rows;
  for (int m : per_class) {
    if (m > smallest) continue;
    const SplitFn split_for = [&, m](std::uint64_t seed) {
      Rng rng(derive_seed(seed, 3));
      return per_class_split(ds.labels, ds.num_classes, m, 500, 1000, rng);
    };
    for (const auto& [name, v] : variants) {
      rows.push_back(summarize(std::to_string(m), name, run_repeated(ds, split_for, v, seeds, jobs)));
    }
  }
  return rows;
}

std::vector<AblationRow> ablate_partition_policy(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                                 std::span<const std::uint64_t> seeds, int jobs) {
  if (!(hp.gamma > 0)) throw std::invalid_argument("fixed-vs-random needs gamma > 0");
  std::vector<AblationRow> rows;
  for (PartitionPolicy policy : {PartitionPolicy::Random, PartitionPolicy::Fixed}) {
    Hyperparams v = hp;
    v.partition = policy;
    rows.push_back(summarize("partition", std::string(to_string(policy)), run_repeated(ds, split, v, seeds, jobs)));
  }
  return rows;
}

std::vector<AblationRow> ablate_tv_vs_preg(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                           std::span<const std::uint64_t> seeds, int jobs) {
  const Hyperparams base = ce_only(hp);
  const double beta = tv_weight(hp);
  Hyperparams tv_basic = base;
  tv_basic.beta = beta;
  tv_basic.tv_edge_aware = false;
  Hyperparams tv_ours = base;
  tv_ours.beta = beta;
  tv_ours.tv_edge_aware = true;
  Hyperparams preg = base;
  preg.preg_weight = hp.preg_weight > 0 ? hp.preg_weight : beta / static_cast<double>(ds.num_nodes());

  std::vector<AblationRow> rows;
  const std::pair<const char*, const Hyperparams*> variants[] = {
      {"gcn", &base}, {"tv-basic", &tv_basic}, {"tv-ours", &tv_ours}, {"p-reg", &preg}};
  for (const auto& [name, v] : variants) rows.push_back(summarize(ds.name, name, run_repeated(ds, split, *v, seeds, jobs)));
  return rows;
}

std::vector<AblationRow> ablate_depth(const Dataset& ds, const std::string& split, const Hyperparams& hp,
                                      std::span<const std::uint64_t> seeds, int jobs, std::vector<int> depths) {
  std::vector<AblationRow> rows;
  for (int layers : depths) {
    Hyperparams enc_hp = hp;
    enc_hp.layers = layers;
    Hyperparams ce_hp = ce_only(enc_hp);
    rows.push_back(summarize(std::to_string(layers), std::string(to_string(hp.backbone)),
                             run_repeated(ds, split, ce_hp, seeds, jobs)));
    rows.push_back(summarize(std::to_string(layers), "enc-" + std::string(to_string(hp.backbone)),
                             run_repeated(ds, split, enc_hp, seeds, jobs)));
  }
  return rows;
}

std::vector<AblationRow> run_study(std::string_view study, const Dataset& ds, const std::string& split,
                                   const Hyperparams& hp, std::span<const std::uint64_t> seeds, int jobs) {
  if (study == "loss-influence") return ablate_loss_influence(ds, hp, seeds, jobs);
  if (study == "fixed-vs-random") return ablate_partition_policy(ds, split, hp, seeds, jobs);
  if (study == "tv-vs-preg") return ablate_tv_vs_preg(ds, split, hp, seeds, jobs);
  if (study == "depth-sweep") return ablate_depth(ds, split, hp, seeds, jobs);
  throw std::invalid_argument("unknown study '" + std::string(study) +
                              "' (expected loss-influence, fixed-vs-random, tv-vs-preg or depth-sweep)");
}

void write_ablation_csv(const std::filesystem::path& file, std::span<const AblationRow> rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "setting,variant,seeds,mean_test,std_test,tests\n";
  char buf[32];
  for (const AblationRow& r : rows) {
    out << r.setting << ',' << r.variant << ',' << r.seeds.size() << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,", r.mean_test, r.std_test);
    out << buf;
    for (std::size_t i = 0; i < r.test.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.6f", i ? ";" : "", r.test[i]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace enc
