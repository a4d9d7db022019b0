#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "enc/types.hpp"

namespace enc {

/// Canonical undirected edge, always stored with i < j.
struct Edge {
  NodeId i = 0;
  NodeId j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// D̃^{-1/2} (A + I) D̃^{-1/2} in CSR form. Column indices within a row are
/// sorted, so the diagonal sits at its natural position.
struct NormalizedPropagation {
  NodeId n = 0;
  std::vector<std::int64_t> row_offsets;
  std::vector<NodeId> col_indices;
  std::vector<Real> values;

  [[nodiscard]] std::size_t nnz() const { return col_indices.size(); }
  [[nodiscard]] Real at(NodeId row, NodeId col) const;
};

/// w_i = 1 / sqrt(d_i + 1), self-loops excluded from d_i.
struct NodeWeights {
  std::vector<Real> w;
};

class Graph {
 public:
  struct BuildReport;

  Graph() = default;

  /// Builds the canonical graph from raw pairs. Mirrored pairs and duplicates
  /// are merged; self-loops are dropped and counted in the report.
  /// Throws std::out_of_range for ids outside [0, n).
  static Graph build(NodeId n, std::span<const std::pair<NodeId, NodeId>> pairs,
                     BuildReport* report = nullptr);

  [[nodiscard]] NodeId num_nodes() const { return n_; }
  [[nodiscard]] std::size_t num_edges() const { return edges_.size(); }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  [[nodiscard]] const std::vector<NodeId>& col_indices() const { return col_indices_; }
  [[nodiscard]] const std::vector<int>& degrees() const { return degrees_; }
  [[nodiscard]] int degree(NodeId i) const { return degrees_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId i) const;

  [[nodiscard]] const NormalizedPropagation& normalized_propagation() const { return propagation_; }
  [[nodiscard]] NodeWeights node_weights() const;

 private:
  NodeId n_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
  NormalizedPropagation propagation_;
};

struct Graph::BuildReport {
  std::size_t input_pairs = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_merged = 0;
};

NormalizedPropagation normalized_propagation(const Graph& g);

/// Row for canonical edge (i, j) is w_i f_i - w_j f_j. Result is |E| x c.
Matrix graph_gradient(const Matrix& f, const Graph& g, const NodeWeights& w);

/// Sum over undirected edges of 1/2 ||f_i/sqrt(1+d_i) - f_j/sqrt(1+d_j)||^2.
/// Each edge is counted once, so this equals 0.5 * ||graph_gradient(f)||_F^2.
Real dirichlet_energy(const Matrix& f, const Graph& g);

/// Mean over non-isolated nodes of the fraction of neighbours sharing the
/// node's label. Returns 0 when every node is isolated.
double homophily(const Graph& g, std::span<const int> labels);

}  // namespace enc
