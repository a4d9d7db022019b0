#include "enc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace enc {

Real NormalizedPropagation::at(NodeId row, NodeId col) const {
  const auto begin = col_indices.begin() + row_offsets[static_cast<std::size_t>(row)];
  const auto end = col_indices.begin() + row_offsets[static_cast<std::size_t>(row) + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return Real(0);
  return values[static_cast<std::size_t>(it - col_indices.begin())];
}

Graph Graph::build(NodeId n, std::span<const std::pair<NodeId, NodeId>> pairs,
                   BuildReport* report) {
  if (n < 0) throw std::invalid_argument("graph: negative node count");
  BuildReport local;
  local.input_pairs = pairs.size();

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw std::out_of_range("graph: edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") has a node id outside [0, " + std::to_string(n) + ")");
    }
    if (a == b) {
      ++local.self_loops_dropped;
      continue;
    }
    edges.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  local.duplicates_merged = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());

  Graph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  g.degrees_.assign(static_cast<std::size_t>(n), 0);
  for (const Edge& e : g.edges_) {
    ++g.degrees_[static_cast<std::size_t>(e.i)];
    ++g.degrees_[static_cast<std::size_t>(e.j)];
  }
  g.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (NodeId i = 0; i < n; ++i) {
    g.row_offsets_[static_cast<std::size_t>(i) + 1] =
        g.row_offsets_[static_cast<std::size_t>(i)] + g.degrees_[static_cast<std::size_t>(i)];
  }
  g.col_indices_.assign(2 * g.edges_.size(), 0);
  std::vector<std::int64_t> cursor(g.row_offsets_.begin(), g.row_offsets_.end() - 1);
  for (const Edge& e : g.edges_) {
    g.col_indices_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.j)]++)] = e.i;
  }
  for (const Edge& e : g.edges_) {
    g.col_indices_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.i)]++)] = e.j;
  }
  for (NodeId i = 0; i < n; ++i) {
    auto begin = g.col_indices_.begin() + g.row_offsets_[static_cast<std::size_t>(i)];
    auto end = g.col_indices_.begin() + g.row_offsets_[static_cast<std::size_t>(i) + 1];
    std::sort(begin, end);
  }
  g.propagation_ = enc::normalized_propagation(g);
  if (report != nullptr) *report = local;
  return g;
}

std::span<const NodeId> Graph::neighbors(NodeId i) const {
  const auto begin = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(i)]);
  const auto end = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(i) + 1]);
  return {col_indices_.data() + begin, end - begin};
}

NodeWeights Graph::node_weights() const {
  NodeWeights w;
  w.w.resize(degrees_.size());
  for (std::size_t i = 0; i < degrees_.size(); ++i) {
    w.w[i] = Real(1) / std::sqrt(static_cast<Real>(degrees_[i] + 1));
  }
  return w;
}

NormalizedPropagation normalized_propagation(const Graph& g) {
  NormalizedPropagation p;
  p.n = g.num_nodes();
  const auto n = static_cast<std::size_t>(g.num_nodes());
  p.row_offsets.assign(n + 1, 0);
  p.col_indices.reserve(g.col_indices().size() + n);
  p.values.reserve(g.col_indices().size() + n);
  const NodeWeights w = g.node_weights();
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    bool diagonal_done = false;
    for (NodeId j : g.neighbors(i)) {
      if (!diagonal_done && j > i) {
        p.col_indices.push_back(i);
        p.values.push_back(w.w[row] * w.w[row]);
        diagonal_done = true;
      }
      p.col_indices.push_back(j);
      p.values.push_back(w.w[row] * w.w[static_cast<std::size_t>(j)]);
    }
    if (!diagonal_done) {
      p.col_indices.push_back(i);
      p.values.push_back(w.w[row] * w.w[row]);
    }
    p.row_offsets[row + 1] = static_cast<std::int64_t>(p.col_indices.size());
  }
  return p;
}

Matrix graph_gradient(const Matrix& f, const Graph& g, const NodeWeights& w) {
  if (f.rows() != g.num_nodes()) {
    throw ShapeError("graph_gradient: feature rows " + std::to_string(f.rows()) +
                     " != node count " + std::to_string(g.num_nodes()));
  }
  if (w.w.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw ShapeError("graph_gradient: node weight length does not match node count");
  }
  Matrix out(static_cast<Eigen::Index>(g.num_edges()), f.cols());
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const Edge& edge = g.edges()[e];
    out.row(static_cast<Eigen::Index>(e)) =
        w.w[static_cast<std::size_t>(edge.i)] * f.row(edge.i) -
        w.w[static_cast<std::size_t>(edge.j)] * f.row(edge.j);
  }
  return out;
}

Real dirichlet_energy(const Matrix& f, const Graph& g) {
  if (f.rows() != g.num_nodes()) {
    throw ShapeError("dirichlet_energy: feature rows do not match node count");
  }
  return Real(0.5) * graph_gradient(f, g, g.node_weights()).squaredNorm();
}

double homophily(const Graph& g, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw ShapeError("homophily: label count does not match node count");
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = g.neighbors(i);
    if (nbrs.empty()) continue;
    std::size_t same = 0;
    for (NodeId j : nbrs) {
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) ++same;
    }
    total += static_cast<double>(same) / static_cast<double>(nbrs.size());
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace enc
