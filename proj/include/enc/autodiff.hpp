#pragma once

// Reverse-mode automatic differentiation over dense 2-D values.
//
// Every primitive records a node on a Tape. The backward rule of each node is
// written in terms of the same primitives, so running Tape::grad with
// create_graph = true leaves the gradient computation on the tape and it can
// be differentiated again.

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "enc/types.hpp"

namespace enc::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning Tape is alive.
class Var {
 public:
  Var() = default;

  [[nodiscard]] bool valid() const { return tape_ != nullptr; }
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] bool requires_grad() const;
  [[nodiscard]] Real item() const;
  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Computes one gradient per parent (an invalid Var means "no contribution").
using BackwardFn = std::function<std::vector<Var>(const Var& out, const Var& grad)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(Real value);
  /// Leaf that gradients can be requested for.
  Var variable(Matrix value);

  /// Appends a node. The backward rule is kept only when gradient recording is
  /// enabled and at least one parent requires a gradient.
  Var record(Matrix value, std::vector<Var> parents, BackwardFn backward, const char* op);

  /// Gradients of a 1x1 output with respect to `wrt`. With create_graph the
  /// returned tensors are themselves taped and can be differentiated again.
  /// Inputs the output does not depend on receive a zero gradient.
  std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph = false);

  [[nodiscard]] bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const char* op_name(const Var& v) const { return node(v).op; }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool leaf = false;
    const char* op = "";
  };
  const Node& node(const Var& v) const { return nodes_[v.id_]; }

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

/// Disables gradient recording on a tape for the guard's lifetime.
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), previous_(tape.grad_enabled()) {
    tape_.set_grad_enabled(false);
  }
  ~NoGradGuard() { tape_.set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape& tape_;
  bool previous_;
};

/// Immutable CSR sparsity pattern together with its transpose. Values live in
/// separate nnz x 1 tensors, ordered like the forward pattern's entries.
class SparseLayout {
 public:
  SparseLayout(Eigen::Index rows, Eigen::Index cols, std::vector<std::int64_t> row_offsets,
               std::vector<NodeId> col_indices);

  [[nodiscard]] Eigen::Index rows() const { return rows_; }
  [[nodiscard]] Eigen::Index cols() const { return cols_; }
  [[nodiscard]] std::size_t nnz() const { return col_indices_.size(); }
  [[nodiscard]] const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  [[nodiscard]] const std::vector<NodeId>& col_indices() const { return col_indices_; }
  /// Row id of every entry, shared so it can index gather/scatter ops.
  [[nodiscard]] const std::shared_ptr<const std::vector<NodeId>>& entry_rows() const {
    return entry_rows_;
  }
  [[nodiscard]] const std::shared_ptr<const std::vector<NodeId>>& entry_cols() const {
    return entry_cols_;
  }

  // Transposed pattern: rows are original columns. t_entries maps each
  // transposed entry back to its index in the forward ordering.
  [[nodiscard]] const std::vector<std::int64_t>& t_row_offsets() const { return t_row_offsets_; }
  [[nodiscard]] const std::vector<NodeId>& t_col_indices() const { return t_col_indices_; }
  [[nodiscard]] const std::vector<std::size_t>& t_entries() const { return t_entries_; }

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<std::int64_t> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::shared_ptr<const std::vector<NodeId>> entry_rows_;
  std::shared_ptr<const std::vector<NodeId>> entry_cols_;
  std::vector<std::int64_t> t_row_offsets_;
  std::vector<NodeId> t_col_indices_;
  std::vector<std::size_t> t_entries_;
};

using LayoutPtr = std::shared_ptr<const SparseLayout>;
using IndexPtr = std::shared_ptr<const std::vector<NodeId>>;

/// Sparse operator: a shared pattern plus nnz x 1 values that may or may not
/// be tape-tracked.
struct SparseOperator {
  LayoutPtr layout;
  Var values;
};

// ---- dense primitives --------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var scale(const Var& a, Real factor);
Var neg(const Var& a);

/// Replicates a 1x1, rows x 1 or 1 x cols value to rows x cols.
Var expand(const Var& a, Eigen::Index rows, Eigen::Index cols);
/// Sums a value down to a 1x1, rows x 1 or 1 x cols shape.
Var reduce_to(const Var& a, Eigen::Index rows, Eigen::Index cols);

Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);
Var col_sum(const Var& a);
/// a * s with s a 1x1 tensor.
Var mul_scalar(const Var& a, const Var& s);

Var relu(const Var& a);
Var leaky_relu(const Var& a, Real slope);
Var exp(const Var& a);
/// Natural log of max(x, log_clamp). Throws std::domain_error for x < 0.
Var log(const Var& a);
Var sqrt(const Var& a);
/// Subgradient 0 at 0.
Var abs(const Var& a);

Var row_softmax(const Var& a);
Var row_log_softmax(const Var& a);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, Eigen::Index offset, Eigen::Index width);
Var gather_rows(const Var& a, IndexPtr index);
/// Sums rows of `a` into an out_rows x cols result at positions `index`.
Var scatter_rows(const Var& a, IndexPtr index, Eigen::Index out_rows);

/// Inverted dropout: surviving entries are scaled by 1/(1-p). Identity when
/// train is false or p == 0.
Var dropout(const Var& a, Real p, Rng& rng, bool train);

Var dot(const Var& a, const Var& b);
Var l2_norm(const Var& a);

// ---- sparse primitives -------------------------------------------------

/// S x (or S^T x when transposed) for S given by layout + nnz x 1 values.
Var spmm(const LayoutPtr& layout, bool transposed, const Var& values, const Var& x);
inline Var spmm(const SparseOperator& op, const Var& x) { return spmm(op.layout, false, op.values, x); }

/// Sampled dense-dense product: entry e = (i, j) of the pattern gets
/// a_i . b_j (or a_j . b_i when transposed). Returns nnz x 1.
Var sddmm(const LayoutPtr& layout, bool transposed, const Var& a, const Var& b);

/// Softmax of nnz x 1 scores within each row of the pattern.
Var segment_softmax(const LayoutPtr& layout, const Var& scores);

// ---- initialisation ----------------------------------------------------

inline constexpr Real kLogClamp = Real(1e-12);

[[nodiscard]] Real glorot_bound(Eigen::Index rows, Eigen::Index cols);
/// Glorot uniform on [-bound, bound].
[[nodiscard]] Matrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);
[[nodiscard]] Matrix identity_init(Eigen::Index c);

}  // namespace enc::ad
