#pragma once

#include <span>
#include <vector>

#include "enc/autodiff.hpp"
#include "enc/graph.hpp"
#include "enc/model.hpp"
#include "enc/operators.hpp"

namespace enc {

struct LossWeights {
  double alpha = 0.0;   // mutual information
  double beta = 0.0;    // total variation
  double gamma = 0.0;   // cross-validating gradients
  double lambda = 2.0;  // class balance inside the MI term
  double sigma = 10.0;  // bandwidth of the edge-aware TV boundary factor

  void validate() const;
};

/// Disjoint halves of the labelled node set.
struct Partition {
  std::vector<NodeId> p1;
  std::vector<NodeId> p2;
};

/// -(1/|mask|) sum_{i in mask} log softmax(logits)_{i, y_i}.
/// Throws std::invalid_argument on an empty mask.
ad::Var cross_entropy(const ad::Var& logits, std::span<const int> labels, std::span<const NodeId> mask);

/// Mean per-node prediction entropy plus lambda times the negative entropy of
/// the mean class distribution, over all rows of yhat.
/// Throws std::invalid_argument when a row does not sum to 1 within 1e-6.
ad::Var mi_loss(const ad::Var& yhat, double lambda);

/// exp(-||(grad_w x_in)_ij||_2^2 / sigma) per canonical edge (|E| x 1). Input
/// features are data, so this is computed once and treated as a constant.
Matrix edge_boundary_weights(const Graph& g, const Matrix& x_in, double sigma);

/// (1/|E|) sum_e ||(grad_w yhat)_e||_1 * m_e. `boundary` is |E| x 1 or empty
/// (all ones: the basic TV term). Throws std::invalid_argument when |E| = 0.
ad::Var tv_loss(const ad::Var& yhat, const GraphOperators& ops, const Matrix& boundary);

/// Convenience wrapper computing the boundary weights from x_in.
ad::Var tv_loss(const ad::Var& yhat, const Matrix& x_in, const Graph& g, const GraphOperators& ops,
                double sigma, bool edge_aware);

/// ||yhat - D̃^{-1} Ã yhat||_F^2 (sum, not mean).
ad::Var preg_loss(const ad::Var& yhat, const GraphOperators& ops);

/// Uniform random permutation split at the midpoint; |p1| = floor(n/2).
/// With `stratify_labels` the split is done per class (ids grouped by label,
/// each group shuffled and alternately assigned). Throws for fewer than 2 ids.
Partition sample_partition(std::span<const NodeId> labelled, Rng& rng,
                           std::span<const int> stratify_labels = {});

struct CvgResult {
  ad::Var value;          // taped scalar; constant 0 when degenerate
  bool degenerate = false;  // a partial gradient had norm <= eps
};

inline constexpr double kCosineEps = 1e-12;

/// -(g1 . g2) / (||g1|| ||g2|| + eps) where g_k is the gradient of the partial
/// cross-entropy over `part_k` with respect to `params`. Both gradients come
/// from the same logits tensor (one forward, one dropout mask) and are taped,
/// so the result is differentiable with respect to the parameters.
CvgResult cvg_loss(const ad::Var& logits, std::span<const int> labels, std::span<const NodeId> part1,
                   std::span<const NodeId> part2, std::span<const ad::Var> params);

inline CvgResult cvg_loss(const ad::Var& logits, std::span<const int> labels, const Partition& part,
                          std::span<const ad::Var> params) {
  return cvg_loss(logits, labels, part.p1, part.p2, params);
}

/// Negative cosine similarity between two sets of (flattened) tensors.
CvgResult gradient_alignment(std::span<const ad::Var> g1, std::span<const ad::Var> g2);

struct LossBreakdown {
  double total = 0;
  double ce = 0;
  double mi = 0;
  double tv = 0;
  double cvg = 0;
  double preg = 0;
  bool cvg_degenerate = false;
};

struct LossConfig {
  LossWeights weights;
  /// false selects the basic TV term (boundary factor fixed to 1).
  bool tv_edge_aware = true;
  /// Weight of the P-reg ablation term; 0 disables it.
  double preg_weight = 0.0;
};

struct TotalLoss {
  ad::Var value;
  LossBreakdown breakdown;
};

/// Everything a loss evaluation needs that is fixed for a dataset.
struct LossContext {
  const GraphOperators* ops = nullptr;
  std::span<const int> labels;
  std::span<const NodeId> train_ids;
  /// |E| x 1 boundary weights for the edge-aware TV term (empty otherwise).
  const Matrix* boundary = nullptr;
};

/// L_CE + alpha L_MI + beta L_TV + gamma L_CVG (+ preg_weight L_Preg).
/// Terms with zero weight are not computed. MI/TV/P-reg use softmax(logits)
/// from the same forward as CE. `partition` is required when gamma > 0.
TotalLoss total_loss(const ad::Var& logits, const LossContext& ctx, const LossConfig& cfg,
                     const Partition* partition, std::span<const ad::Var> params);

}  // namespace enc
