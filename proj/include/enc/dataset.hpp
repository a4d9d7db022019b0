#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "enc/graph.hpp"
#include "enc/types.hpp"

namespace enc {

/// Raised for anything wrong with a dataset directory.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  /// Throws DataError unless the parts are disjoint, in range and train is
  /// non-empty.
  void validate(NodeId n) const;
};

struct Dataset {
  std::string name;
  Graph graph;
  /// Features exactly as stored on disk.
  Matrix raw_features;
  /// Model input: raw_features, row-normalised when normalize_features is set.
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  bool normalize_features = false;
  /// num_edges as declared in meta (may be an upstream count).
  std::size_t declared_edges = 0;
  std::map<std::string, Split> splits;

  [[nodiscard]] NodeId num_nodes() const { return graph.num_nodes(); }
  [[nodiscard]] int num_features() const { return static_cast<int>(features.cols()); }
};

struct LoadReport {
  std::vector<std::string> warnings;
};

/// Reads a canonical dataset directory:
///   meta           key=value: name, n, num_features, num_classes, num_edges,
///                  normalize_features={0|1}
///   features.tsv   n lines of num_features decimal values
///   labels.tsv     n lines, one integer in [0, num_classes)
///   edges.tsv      "i<TAB>j" per line, i < j, sorted, deduplicated
///   split-*.tsv    n lines from {train, val, test, none}
/// n, num_features and num_classes must match the files; an edge-count
/// mismatch is reported as a warning. Errors carry file and line number.
Dataset load_canonical(const std::filesystem::path& dir, LoadReport* report = nullptr);

/// Writes the canonical format (values with %.17g, so a load round-trips
/// bit-exactly). Creates the directory if needed.
void write_canonical(const Dataset& ds, const std::filesystem::path& dir);

/// Row-normalises non-negative rows to sum 1; zero rows are left as is.
Matrix row_normalize(const Matrix& x);

/// `per_class` training nodes per class in rng order, then up to n_val
/// validation and n_test test nodes from the shuffled remainder.
/// Throws DataError when a class has fewer than per_class nodes.
Split per_class_split(std::span<const int> labels, int num_classes, int per_class, int n_val, int n_test,
                      Rng& rng);

/// Class-stratified 48/32/20 split. Boundaries use cumulative rounding over
/// the class-sorted order, so global sizes are exact and every class is
/// within one node of its share.
Split fully_supervised_split(std::span<const int> labels, int num_classes, std::uint64_t seed);

/// Resolves a split name against a dataset:
///   "public"   split-public.tsv if present, else 20 per class / 500 / 1000
///   "geom-<i>" split-geom-<i>.tsv if present, else fully_supervised_split(i)
///   "full"     fully_supervised_split(seed)
///   "random"   20 per class / 500 / 1000 drawn with seed
///   other      split-<name>.tsv, which must exist
Split resolve_split(const Dataset& ds, const std::string& name, std::uint64_t seed);

struct SbmConfig {
  NodeId n = 500;
  int k = 5;
  double p_in = 0.05;
  double p_out = 0.01;
  int feature_dim = 16;
  double signal_strength = 1.0;
  std::uint64_t seed = 0;
  /// Parameters of the "public" split stored with the generated dataset.
  int train_per_class = 20;
  int n_val = 500;
  int n_test = 1000;
};

/// k contiguous equal blocks (node i belongs to block i*k/n); each pair is an
/// edge with probability p_in inside a block and p_out across blocks.
/// Features are signal_strength * onehot(block) + N(0, 1) noise.
Dataset generate_sbm(const SbmConfig& cfg);

/// p_in (n/k - 1) / (p_in (n/k - 1) + p_out (n - n/k)), the edge-level
/// same-block fraction for equal blocks.
double sbm_expected_homophily(const SbmConfig& cfg);

}  // namespace enc
