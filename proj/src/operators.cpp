#include "enc/operators.hpp"

namespace enc {

GraphOperators GraphOperators::from_graph(const Graph& g) {
  GraphOperators ops;
  ops.num_nodes = g.num_nodes();
  ops.num_edges = g.num_edges();

  const NormalizedPropagation& p = g.normalized_propagation();
  ops.propagation_layout = std::make_shared<const ad::SparseLayout>(g.num_nodes(), g.num_nodes(),
                                                                    p.row_offsets, p.col_indices);
  const auto nnz = static_cast<Eigen::Index>(p.nnz());
  ops.propagation_values.resize(nnz, 1);
  ops.smoothing_values.resize(nnz, 1);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const Real inv_deg = Real(1) / static_cast<Real>(g.degree(i) + 1);
    for (auto e = p.row_offsets[static_cast<std::size_t>(i)]; e < p.row_offsets[static_cast<std::size_t>(i) + 1]; ++e) {
      ops.propagation_values(e, 0) = p.values[static_cast<std::size_t>(e)];
      ops.smoothing_values(e, 0) = inv_deg;
    }
  }

  const NodeWeights w = g.node_weights();
  const std::size_t m = g.num_edges();
  std::vector<std::int64_t> offsets(m + 1);
  std::vector<NodeId> cols(2 * m);
  ops.incidence_values.resize(static_cast<Eigen::Index>(2 * m), 1);
  for (std::size_t e = 0; e < m; ++e) {
    const Edge& edge = g.edges()[e];
    offsets[e + 1] = static_cast<std::int64_t>(2 * (e + 1));
    cols[2 * e] = edge.i;
    cols[2 * e + 1] = edge.j;
    ops.incidence_values(static_cast<Eigen::Index>(2 * e), 0) = w.w[static_cast<std::size_t>(edge.i)];
    ops.incidence_values(static_cast<Eigen::Index>(2 * e + 1), 0) = -w.w[static_cast<std::size_t>(edge.j)];
  }
  ops.incidence_layout = std::make_shared<const ad::SparseLayout>(static_cast<Eigen::Index>(m), g.num_nodes(),
                                                                  std::move(offsets), std::move(cols));
  return ops;
}

}  // namespace enc
