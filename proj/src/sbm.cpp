#include <random>
#include <string>

#include "enc/dataset.hpp"

namespace enc {

namespace {

int block_of(NodeId i, NodeId n, int k) {
  return static_cast<int>(static_cast<long long>(i) * k / n);
}

}  // namespace

Dataset generate_sbm(const SbmConfig& cfg) {
  if (cfg.n < 2 || cfg.k < 1 || cfg.k > cfg.n) throw DataError("generate_sbm: need 1 <= k <= n and n >= 2");
  if (cfg.p_in < 0 || cfg.p_in > 1 || cfg.p_out < 0 || cfg.p_out > 1) {
    throw DataError("generate_sbm: probabilities must lie in [0, 1]");
  }
  if (cfg.feature_dim < cfg.k) throw DataError("generate_sbm: feature_dim must be at least k");

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset ds;
  ds.name = "sbm-n" + std::to_string(cfg.n) + "-k" + std::to_string(cfg.k) + "-s" + std::to_string(cfg.seed);
  ds.num_classes = cfg.k;
  ds.labels.resize(static_cast<std::size_t>(cfg.n));
  for (NodeId i = 0; i < cfg.n; ++i) ds.labels[static_cast<std::size_t>(i)] = block_of(i, cfg.n, cfg.k);

  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId i = 0; i < cfg.n; ++i) {
    for (NodeId j = i + 1; j < cfg.n; ++j) {
      const double p = ds.labels[static_cast<std::size_t>(i)] == ds.labels[static_cast<std::size_t>(j)] ? cfg.p_in : cfg.p_out;
      if (coin(rng) < p) pairs.emplace_back(i, j);
    }
  }
  ds.graph = Graph::build(cfg.n, pairs);
  ds.declared_edges = ds.graph.num_edges();

  ds.raw_features.resize(cfg.n, cfg.feature_dim);
  for (NodeId i = 0; i < cfg.n; ++i) {
    for (int c = 0; c < cfg.feature_dim; ++c) ds.raw_features(i, c) = static_cast<Real>(noise(rng));
    ds.raw_features(i, ds.labels[static_cast<std::size_t>(i)]) += static_cast<Real>(cfg.signal_strength);
  }
  ds.features = ds.raw_features;

  int smallest = cfg.n;
  for (int b = 0; b < cfg.k; ++b) {
    int count = 0;
    for (int y : ds.labels) count += y == b;
    smallest = std::min(smallest, count);
  }
  Rng split_rng(cfg.seed ^ 0x5bd1e995ULL);
  ds.splits.emplace("public", per_class_split(ds.labels, cfg.k, std::min(cfg.train_per_class, smallest), cfg.n_val,
                                              cfg.n_test, split_rng));
  return ds;
}

double sbm_expected_homophily(const SbmConfig& cfg) {
  const double block = static_cast<double>(cfg.n) / cfg.k;
  const double same = cfg.p_in * (block - 1);
  const double diff = cfg.p_out * (cfg.n - block);
  return same + diff > 0 ? same / (same + diff) : 0.0;
}

}  // namespace enc
