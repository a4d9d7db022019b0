#include "enc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace enc {

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw std::invalid_argument("loss weights must be non-negative");
  if (!(sigma > 0)) throw std::invalid_argument("TV bandwidth sigma must be positive");
}

ad::Var cross_entropy(const ad::Var& logits, std::span<const int> labels, std::span<const NodeId> mask) {
  if (mask.empty()) throw std::invalid_argument("cross_entropy: empty node mask");
  if (labels.size() != static_cast<std::size_t>(logits.rows())) {
    throw ShapeError("cross_entropy: label count does not match logits rows");
  }
  auto index = std::make_shared<std::vector<NodeId>>(mask.begin(), mask.end());
  Matrix onehot = Matrix::Zero(static_cast<Eigen::Index>(mask.size()), logits.cols());
  for (std::size_t r = 0; r < mask.size(); ++r) {
    const int y = labels[static_cast<std::size_t>(mask[r])];
    if (y < 0 || y >= logits.cols()) throw std::invalid_argument("cross_entropy: label out of range");
    onehot(static_cast<Eigen::Index>(r), y) = Real(1);
  }
  const ad::Var logp = ad::row_log_softmax(ad::gather_rows(logits, std::move(index)));
  const ad::Var picked = ad::sum(ad::mul(logp, logits.tape().constant(std::move(onehot))));
  return ad::scale(picked, Real(-1) / static_cast<Real>(mask.size()));
}

ad::Var mi_loss(const ad::Var& yhat, double lambda) {
  const Eigen::Index n = yhat.rows();
  if (n == 0) throw std::invalid_argument("mi_loss: empty prediction tensor");
  const auto row_sums = yhat.value().rowwise().sum();
  for (Eigen::Index r = 0; r < n; ++r) {
    if (std::abs(static_cast<double>(row_sums(r)) - 1.0) > 1e-6) {
      throw std::invalid_argument("mi_loss: row " + std::to_string(r) + " is not a probability vector");
    }
  }
  const Real inv_n = Real(1) / static_cast<Real>(n);
  const ad::Var node_entropy = ad::scale(ad::sum(ad::mul(yhat, ad::log(yhat))), -inv_n);
  const ad::Var mean_class = ad::scale(ad::col_sum(yhat), inv_n);
  const ad::Var balance = ad::scale(ad::sum(ad::mul(mean_class, ad::log(mean_class))), static_cast<Real>(lambda));
  return ad::add(node_entropy, balance);
}

Matrix edge_boundary_weights(const Graph& g, const Matrix& x_in, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("edge_boundary_weights: sigma must be positive");
  const Matrix grad = graph_gradient(x_in, g, g.node_weights());
  Matrix m(grad.rows(), 1);
  for (Eigen::Index e = 0; e < grad.rows(); ++e) {
    m(e, 0) = std::exp(-grad.row(e).squaredNorm() / static_cast<Real>(sigma));
  }
  return m;
}

ad::Var tv_loss(const ad::Var& yhat, const GraphOperators& ops, const Matrix& boundary) {
  if (ops.num_edges == 0) throw std::invalid_argument("tv_loss: graph has no edges");
  if (yhat.rows() != ops.num_nodes) throw ShapeError("tv_loss: prediction rows do not match node count");
  ad::Tape& tape = yhat.tape();
  const ad::Var grad = ad::spmm(ops.incidence_layout, false, tape.constant(ops.incidence_values), yhat);
  ad::Var per_edge = ad::row_sum(ad::abs(grad));
  if (boundary.size() != 0) {
    if (boundary.rows() != static_cast<Eigen::Index>(ops.num_edges) || boundary.cols() != 1) {
      throw ShapeError("tv_loss: boundary weights must be |E| x 1");
    }
    per_edge = ad::mul(per_edge, tape.constant(boundary));
  }
  return ad::scale(ad::sum(per_edge), Real(1) / static_cast<Real>(ops.num_edges));
}

ad::Var tv_loss(const ad::Var& yhat, const Matrix& x_in, const Graph& g, const GraphOperators& ops,
                double sigma, bool edge_aware) {
  if (x_in.rows() != g.num_nodes()) throw ShapeError("tv_loss: input feature rows do not match node count");
  return tv_loss(yhat, ops, edge_aware ? edge_boundary_weights(g, x_in, sigma) : Matrix{});
}

ad::Var preg_loss(const ad::Var& yhat, const GraphOperators& ops) {
  if (yhat.rows() != ops.num_nodes) throw ShapeError("preg_loss: prediction rows do not match node count");
  ad::Tape& tape = yhat.tape();
  const ad::Var smoothed = ad::spmm(ops.propagation_layout, false, tape.constant(ops.smoothing_values), yhat);
  const ad::Var residual = ad::sub(yhat, smoothed);
  return ad::sum(ad::mul(residual, residual));
}

Partition sample_partition(std::span<const NodeId> labelled, Rng& rng, std::span<const int> stratify_labels) {
  if (labelled.size() < 2) throw std::invalid_argument("sample_partition: need at least 2 labelled nodes");
  std::vector<NodeId> order(labelled.begin(), labelled.end());
  Partition part;
  if (stratify_labels.empty()) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto half = static_cast<std::ptrdiff_t>(order.size() / 2);
    part.p1.assign(order.begin(), order.begin() + half);
    part.p2.assign(order.begin() + half, order.end());
    return part;
  }
  std::map<int, std::vector<NodeId>> by_class;
  for (NodeId id : order) by_class[stratify_labels[static_cast<std::size_t>(id)]].push_back(id);
  std::size_t k = 0;
  for (auto& [label, ids] : by_class) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (NodeId id : ids) (k++ % 2 == 0 ? part.p2 : part.p1).push_back(id);
  }
  return part;
}

CvgResult gradient_alignment(std::span<const ad::Var> g1, std::span<const ad::Var> g2) {
  if (g1.size() != g2.size() || g1.empty()) throw ShapeError("gradient_alignment: mismatched gradient lists");
  ad::Var dot_total = ad::dot(g1[0], g2[0]);
  ad::Var sq1 = ad::dot(g1[0], g1[0]);
  ad::Var sq2 = ad::dot(g2[0], g2[0]);
  for (std::size_t k = 1; k < g1.size(); ++k) {
    dot_total = ad::add(dot_total, ad::dot(g1[k], g2[k]));
    sq1 = ad::add(sq1, ad::dot(g1[k], g1[k]));
    sq2 = ad::add(sq2, ad::dot(g2[k], g2[k]));
  }
  ad::Tape& tape = g1[0].tape();
  if (std::sqrt(static_cast<double>(sq1.item())) <= kCosineEps ||
      std::sqrt(static_cast<double>(sq2.item())) <= kCosineEps) {
    return {tape.constant(Real(0)), true};
  }
  const ad::Var denom = ad::add(ad::mul(ad::sqrt(sq1), ad::sqrt(sq2)), tape.constant(static_cast<Real>(kCosineEps)));
  return {ad::neg(ad::divide(dot_total, denom)), false};
}

CvgResult cvg_loss(const ad::Var& logits, std::span<const int> labels, std::span<const NodeId> part1,
                   std::span<const NodeId> part2, std::span<const ad::Var> params) {
  if (part1.empty() || part2.empty()) throw std::invalid_argument("cvg_loss: both partition halves must be non-empty");
  ad::Tape& tape = logits.tape();
  const ad::Var ce1 = cross_entropy(logits, labels, part1);
  const ad::Var ce2 = cross_entropy(logits, labels, part2);
  const std::vector<ad::Var> g1 = tape.grad(ce1, params, /*create_graph=*/true);
  const std::vector<ad::Var> g2 = tape.grad(ce2, params, /*create_graph=*/true);
  return gradient_alignment(g1, g2);
}

TotalLoss total_loss(const ad::Var& logits, const LossContext& ctx, const LossConfig& cfg,
                     const Partition* partition, std::span<const ad::Var> params) {
  cfg.weights.validate();
  if (ctx.ops == nullptr) throw std::invalid_argument("total_loss: missing graph operators");
  const LossWeights& w = cfg.weights;

  TotalLoss out;
  const ad::Var ce = cross_entropy(logits, ctx.labels, ctx.train_ids);
  out.breakdown.ce = static_cast<double>(ce.item());
  ad::Var total = ce;

  const bool need_yhat = w.alpha > 0 || w.beta > 0 || cfg.preg_weight > 0;
  const ad::Var yhat = need_yhat ? ad::row_softmax(logits) : ad::Var{};
  if (w.alpha > 0) {
    const ad::Var mi = mi_loss(yhat, w.lambda);
    out.breakdown.mi = static_cast<double>(mi.item());
    total = ad::add(total, ad::scale(mi, static_cast<Real>(w.alpha)));
  }
  if (w.beta > 0) {
    if (cfg.tv_edge_aware && ctx.boundary == nullptr) {
      throw std::invalid_argument("total_loss: edge-aware TV requires boundary weights");
    }
    static const Matrix kNoBoundary;
    const Matrix& boundary = cfg.tv_edge_aware ? *ctx.boundary : kNoBoundary;
    const ad::Var tv = tv_loss(yhat, *ctx.ops, boundary);
    out.breakdown.tv = static_cast<double>(tv.item());
    total = ad::add(total, ad::scale(tv, static_cast<Real>(w.beta)));
  }
  if (cfg.preg_weight > 0) {
    const ad::Var preg = preg_loss(yhat, *ctx.ops);
    out.breakdown.preg = static_cast<double>(preg.item());
    total = ad::add(total, ad::scale(preg, static_cast<Real>(cfg.preg_weight)));
  }
  if (w.gamma > 0) {
    if (partition == nullptr) throw std::invalid_argument("total_loss: gamma > 0 requires a partition");
    const CvgResult cvg = cvg_loss(logits, ctx.labels, *partition, params);
    out.breakdown.cvg = static_cast<double>(cvg.value.item());
    out.breakdown.cvg_degenerate = cvg.degenerate;
    if (!cvg.degenerate) total = ad::add(total, ad::scale(cvg.value, static_cast<Real>(w.gamma)));
  }
  out.value = total;
  out.breakdown.total = static_cast<double>(total.item());
  return out;
}

}  // namespace enc
