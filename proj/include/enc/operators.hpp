#pragma once

#include "enc/autodiff.hpp"
#include "enc/graph.hpp"

namespace enc {

/// Sparse operators derived from a Graph, laid out for the tape.
///
/// The propagation pattern is A + I with sorted columns. `propagation` holds
/// D̃^{-1/2} Ã D̃^{-1/2} and `smoothing` holds D̃^{-1} Ã on the same pattern.
/// `incidence` is the |E| x n weighted gradient operator: row e of canonical
/// edge (i, j) has w_i at column i and -w_j at column j.
struct GraphOperators {
  NodeId num_nodes = 0;
  std::size_t num_edges = 0;
  ad::LayoutPtr propagation_layout;
  Matrix propagation_values;
  Matrix smoothing_values;
  ad::LayoutPtr incidence_layout;
  Matrix incidence_values;

  static GraphOperators from_graph(const Graph& g);
};

}  // namespace enc
