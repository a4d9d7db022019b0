#include "enc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace enc::ad {

namespace {

std::string shape(const Var& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::logic_error(std::string(op) + ": operands on different tapes");
}

Var matmul_ex(const Var& a, const Var& b, bool ta, bool tb);

Var pad_cols(const Var& a, Eigen::Index offset, Eigen::Index total);

/// 1/x where x > kLogClamp, else 0. Derivative of the clamped log.
Var clamp_reciprocal(const Var& a) {
  Matrix v = a.value().unaryExpr([](Real x) { return x > kLogClamp ? Real(1) / x : Real(0); });
  return a.tape().record(
      std::move(v), {a},
      [](const Var& out, const Var& g) {
        return std::vector<Var>{neg(mul(g, mul(out, out)))};
      },
      "clamp_reciprocal");
}

Var matmul_ex(const Var& a, const Var& b, bool ta, bool tb) {
  require_same_tape(a, b, "matmul");
  const Eigen::Index inner_a = ta ? a.rows() : a.cols();
  const Eigen::Index inner_b = tb ? b.cols() : b.rows();
  if (inner_a != inner_b) {
    throw ShapeError("matmul: inner dimension mismatch " + shape(a) + (ta ? "^T" : "") + " * " +
                     shape(b) + (tb ? "^T" : ""));
  }
  Matrix v;
  if (!ta && !tb) v.noalias() = a.value() * b.value();
  else if (ta && !tb) v.noalias() = a.value().transpose() * b.value();
  else if (!ta && tb) v.noalias() = a.value() * b.value().transpose();
  else v.noalias() = a.value().transpose() * b.value().transpose();

  return a.tape().record(
      std::move(v), {a, b},
      [a, b, ta, tb](const Var&, const Var& g) {
        std::vector<Var> r(2);
        const bool need_a = a.requires_grad();
        const bool need_b = b.requires_grad();
        if (!ta && !tb) {
          if (need_a) r[0] = matmul_ex(g, b, false, true);
          if (need_b) r[1] = matmul_ex(a, g, true, false);
        } else if (ta && !tb) {
          if (need_a) r[0] = matmul_ex(b, g, false, true);
          if (need_b) r[1] = matmul_ex(a, g, false, false);
        } else if (!ta && tb) {
          if (need_a) r[0] = matmul_ex(g, b, false, false);
          if (need_b) r[1] = matmul_ex(g, a, true, false);
        } else {
          if (need_a) r[0] = matmul_ex(b, g, true, true);
          if (need_b) r[1] = matmul_ex(g, a, true, true);
        }
        return r;
      },
      "matmul");
}

Var pad_cols(const Var& a, Eigen::Index offset, Eigen::Index total) {
  Matrix v = Matrix::Zero(a.rows(), total);
  v.middleCols(offset, a.cols()) = a.value();
  const Eigen::Index width = a.cols();
  return a.tape().record(
      std::move(v), {a},
      [offset, width](const Var&, const Var& g) {
        return std::vector<Var>{slice_cols(g, offset, width)};
      },
      "pad_cols");
}

}  // namespace

// ---- Var / Tape --------------------------------------------------------

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: access through an empty handle");
  return tape_->node(*this).value;
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->node(*this).requires_grad; }

Real Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("item: tensor is " + shape(*this) + ", not 1x1");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, true, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Real value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true, true, "variable"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward, const char* op) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& p : parents) {
      if (&p.tape() != this) throw std::logic_error(std::string(op) + ": parent recorded on another tape");
      needs = needs || p.requires_grad();
    }
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.requires_grad = needs;
  if (needs) {
    n.parents.reserve(parents.size());
    for (const Var& p : parents) n.parents.push_back(p.id_);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::grad(const Var& output, std::span<const Var> wrt, bool create_graph) {
  if (output.tape_ != this) throw std::logic_error("backward: output belongs to another tape");
  if (output.rows() != 1 || output.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape(output));
  }
  if (!output.requires_grad()) throw std::logic_error("backward: loss does not depend on any variable");
  std::size_t lowest = output.id_;
  for (const Var& w : wrt) {
    if (w.tape_ != this || !w.requires_grad()) {
      throw std::logic_error("backward: requested input is detached from the tape");
    }
    lowest = std::min(lowest, w.id_);
  }

  struct ModeRestore {
    Tape& tape;
    bool previous;
    ~ModeRestore() { tape.grad_enabled_ = previous; }
  } restore{*this, grad_enabled_};
  grad_enabled_ = create_graph;

  const std::size_t top = output.id_;
  std::vector<Var> grads(top + 1);
  grads[top] = constant(Real(1));
  for (std::size_t id = top + 1; id-- > lowest;) {
    if (!grads[id].valid()) continue;
    // Deque references stay valid while the rule appends new nodes.
    const Node& nd = nodes_[id];
    if (!nd.backward) continue;
    const std::vector<Var> parent_grads = nd.backward(Var(this, id), grads[id]);
    for (std::size_t k = 0; k < parent_grads.size(); ++k) {
      const Var& pg = parent_grads[k];
      if (!pg.valid()) continue;
      const std::size_t p = nd.parents[k];
      grads[p] = grads[p].valid() ? add(grads[p], pg) : pg;
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id_ <= top && grads[w.id_].valid()) {
      out.push_back(grads[w.id_]);
    } else {
      out.push_back(constant(Matrix::Zero(w.rows(), w.cols())));
    }
  }
  return out;
}

// ---- SparseLayout ------------------------------------------------------

SparseLayout::SparseLayout(Eigen::Index rows, Eigen::Index cols, std::vector<std::int64_t> row_offsets,
                           std::vector<NodeId> col_indices)
    : rows_(rows), cols_(cols), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)) {
  if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 ||
      row_offsets_.back() != static_cast<std::int64_t>(col_indices_.size())) {
    throw ShapeError("SparseLayout: row offsets inconsistent with entry count");
  }
  auto er = std::make_shared<std::vector<NodeId>>(col_indices_.size());
  for (Eigen::Index r = 0; r < rows_; ++r) {
    for (auto e = row_offsets_[static_cast<std::size_t>(r)]; e < row_offsets_[static_cast<std::size_t>(r) + 1]; ++e) {
      (*er)[static_cast<std::size_t>(e)] = static_cast<NodeId>(r);
    }
  }
  for (NodeId c : col_indices_) {
    if (c < 0 || c >= cols_) throw ShapeError("SparseLayout: column index out of range");
  }
  entry_rows_ = er;
  entry_cols_ = std::make_shared<const std::vector<NodeId>>(col_indices_);

  t_row_offsets_.assign(static_cast<std::size_t>(cols_) + 1, 0);
  for (NodeId c : col_indices_) ++t_row_offsets_[static_cast<std::size_t>(c) + 1];
  for (std::size_t c = 0; c < static_cast<std::size_t>(cols_); ++c) t_row_offsets_[c + 1] += t_row_offsets_[c];
  t_col_indices_.resize(col_indices_.size());
  t_entries_.resize(col_indices_.size());
  std::vector<std::int64_t> cursor(t_row_offsets_.begin(), t_row_offsets_.end() - 1);
  for (std::size_t e = 0; e < col_indices_.size(); ++e) {
    const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(col_indices_[e])]++);
    t_col_indices_[slot] = (*er)[e];
    t_entries_[slot] = e;
  }
}

// ---- dense primitives --------------------------------------------------

Var matmul(const Var& a, const Var& b) { return matmul_ex(a, b, false, false); }

Var transpose(const Var& a) {
  Matrix v = a.value().transpose();
  return a.tape().record(
      std::move(v), {a}, [](const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; },
      "transpose");
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Matrix v = a.value() + b.value();
  return a.tape().record(
      std::move(v), {a, b}, [](const Var&, const Var& g) { return std::vector<Var>{g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Matrix v = a.value() - b.value();
  return a.tape().record(
      std::move(v), {a, b},
      [b](const Var&, const Var& g) {
        return std::vector<Var>{g, b.requires_grad() ? neg(g) : Var{}};
      },
      "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return a.tape().record(
      std::move(v), {a, b},
      [a, b](const Var&, const Var& g) {
        std::vector<Var> r(2);
        if (a.requires_grad()) r[0] = mul(g, b);
        if (b.requires_grad()) r[1] = mul(g, a);
        return r;
      },
      "mul");
}

Var divide(const Var& a, const Var& b) {
  require_same_shape(a, b, "divide");
  Matrix v = a.value().cwiseQuotient(b.value());
  return a.tape().record(
      std::move(v), {a, b},
      [a, b](const Var& out, const Var& g) {
        std::vector<Var> r(2);
        if (a.requires_grad()) r[0] = divide(g, b);
        if (b.requires_grad()) r[1] = neg(divide(mul(g, out), b));
        return r;
      },
      "divide");
}

Var scale(const Var& a, Real factor) {
  Matrix v = a.value() * factor;
  return a.tape().record(
      std::move(v), {a},
      [factor](const Var&, const Var& g) { return std::vector<Var>{scale(g, factor)}; }, "scale");
}

Var neg(const Var& a) { return scale(a, Real(-1)); }

Var expand(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (a.rows() == rows && a.cols() == cols) return a;
  Matrix v;
  if (a.rows() == 1 && a.cols() == 1) {
    v = Matrix::Constant(rows, cols, a.value()(0, 0));
  } else if (a.rows() == rows && a.cols() == 1) {
    v = a.value().replicate(1, cols);
  } else if (a.rows() == 1 && a.cols() == cols) {
    v = a.value().replicate(rows, 1);
  } else {
    throw ShapeError("expand: cannot broadcast " + shape(a) + " to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const Eigen::Index r0 = a.rows();
  const Eigen::Index c0 = a.cols();
  return a.tape().record(
      std::move(v), {a},
      [r0, c0](const Var&, const Var& g) { return std::vector<Var>{reduce_to(g, r0, c0)}; }, "expand");
}

Var reduce_to(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (a.rows() == rows && a.cols() == cols) return a;
  Matrix v;
  if (rows == 1 && cols == 1) {
    v.resize(1, 1);
    v(0, 0) = a.value().sum();
  } else if (rows == a.rows() && cols == 1) {
    v = a.value().rowwise().sum();
  } else if (rows == 1 && cols == a.cols()) {
    v = a.value().colwise().sum();
  } else {
    throw ShapeError("reduce_to: cannot reduce " + shape(a) + " to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const Eigen::Index r0 = a.rows();
  const Eigen::Index c0 = a.cols();
  return a.tape().record(
      std::move(v), {a},
      [r0, c0](const Var&, const Var& g) { return std::vector<Var>{expand(g, r0, c0)}; }, "reduce");
}

Var sum(const Var& a) { return reduce_to(a, 1, 1); }

Var mean(const Var& a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), Real(1) / static_cast<Real>(a.value().size()));
}

Var row_sum(const Var& a) { return reduce_to(a, a.rows(), 1); }
Var col_sum(const Var& a) { return reduce_to(a, 1, a.cols()); }

Var mul_scalar(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError("mul_scalar: scalar operand is " + shape(s));
  return mul(a, expand(s, a.rows(), a.cols()));
}

Var relu(const Var& a) {
  Matrix v = a.value().cwiseMax(Real(0));
  Matrix mask = (a.value().array() > Real(0)).cast<Real>().matrix();
  return a.tape().record(
      std::move(v), {a},
      [mask = std::move(mask)](const Var&, const Var& g) {
        return std::vector<Var>{mul(g, g.tape().constant(mask))};
      },
      "relu");
}

Var leaky_relu(const Var& a, Real slope) {
  Matrix mask = a.value().unaryExpr([slope](Real x) { return x > Real(0) ? Real(1) : slope; });
  Matrix v = a.value().cwiseProduct(mask);
  return a.tape().record(
      std::move(v), {a},
      [mask = std::move(mask)](const Var&, const Var& g) {
        return std::vector<Var>{mul(g, g.tape().constant(mask))};
      },
      "leaky_relu");
}

Var exp(const Var& a) {
  Matrix v = a.value().array().exp().matrix();
  return a.tape().record(
      std::move(v), {a}, [](const Var& out, const Var& g) { return std::vector<Var>{mul(g, out)}; },
      "exp");
}

Var log(const Var& a) {
  if ((a.value().array() < Real(0)).any()) throw std::domain_error("log: negative input");
  Matrix v = a.value().unaryExpr([](Real x) { return std::log(std::max(x, kLogClamp)); });
  return a.tape().record(
      std::move(v), {a},
      [a](const Var&, const Var& g) { return std::vector<Var>{mul(g, clamp_reciprocal(a))}; }, "log");
}

Var sqrt(const Var& a) {
  if ((a.value().array() < Real(0)).any()) throw std::domain_error("sqrt: negative input");
  Matrix v = a.value().cwiseSqrt();
  return a.tape().record(
      std::move(v), {a},
      [](const Var& out, const Var& g) { return std::vector<Var>{scale(divide(g, out), Real(0.5))}; },
      "sqrt");
}

Var abs(const Var& a) {
  Matrix v = a.value().cwiseAbs();
  Matrix sign = a.value().unaryExpr([](Real x) {
    return x > Real(0) ? Real(1) : (x < Real(0) ? Real(-1) : Real(0));
  });
  return a.tape().record(
      std::move(v), {a},
      [sign = std::move(sign)](const Var&, const Var& g) {
        return std::vector<Var>{mul(g, g.tape().constant(sign))};
      },
      "abs");
}

Var row_log_softmax(const Var& a) {
  const Matrix& x = a.value();
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Real m = x.row(r).maxCoeff();
    const Real lse = m + std::log((x.row(r).array() - m).exp().sum());
    v.row(r) = x.row(r).array() - lse;
  }
  return a.tape().record(
      std::move(v), {a},
      [](const Var& out, const Var& g) {
        const Var s = expand(row_sum(g), g.rows(), g.cols());
        return std::vector<Var>{sub(g, mul(exp(out), s))};
      },
      "row_log_softmax");
}

Var row_softmax(const Var& a) { return exp(row_log_softmax(a)); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    total += p.cols();
  }
  Matrix v(rows, total);
  std::vector<Eigen::Index> offsets;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    offsets.push_back(at);
    widths.push_back(p.cols());
    at += p.cols();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts.front().tape().record(
      std::move(v), parents,
      [parents, offsets, widths](const Var&, const Var& g) {
        std::vector<Var> r(parents.size());
        for (std::size_t k = 0; k < parents.size(); ++k) {
          if (parents[k].requires_grad()) r[k] = slice_cols(g, offsets[k], widths[k]);
        }
        return r;
      },
      "concat_cols");
}

Var slice_cols(const Var& a, Eigen::Index offset, Eigen::Index width) {
  if (offset < 0 || width < 0 || offset + width > a.cols()) throw ShapeError("slice_cols: range out of bounds");
  Matrix v = a.value().middleCols(offset, width);
  const Eigen::Index total = a.cols();
  return a.tape().record(
      std::move(v), {a},
      [offset, total](const Var&, const Var& g) { return std::vector<Var>{pad_cols(g, offset, total)}; },
      "slice_cols");
}

Var gather_rows(const Var& a, IndexPtr index) {
  const Matrix& x = a.value();
  Matrix v(static_cast<Eigen::Index>(index->size()), x.cols());
  for (std::size_t r = 0; r < index->size(); ++r) {
    const NodeId src = (*index)[r];
    if (src < 0 || src >= x.rows()) throw ShapeError("gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(r)) = x.row(src);
  }
  const Eigen::Index n = x.rows();
  return a.tape().record(
      std::move(v), {a},
      [index, n](const Var&, const Var& g) { return std::vector<Var>{scatter_rows(g, index, n)}; },
      "gather_rows");
}

Var scatter_rows(const Var& a, IndexPtr index, Eigen::Index out_rows) {
  if (static_cast<std::size_t>(a.rows()) != index->size()) throw ShapeError("scatter_rows: index length mismatch");
  const Matrix& x = a.value();
  Matrix v = Matrix::Zero(out_rows, x.cols());
  for (std::size_t r = 0; r < index->size(); ++r) {
    const NodeId dst = (*index)[r];
    if (dst < 0 || dst >= out_rows) throw ShapeError("scatter_rows: index out of range");
    v.row(dst) += x.row(static_cast<Eigen::Index>(r));
  }
  return a.tape().record(
      std::move(v), {a},
      [index](const Var&, const Var& g) { return std::vector<Var>{gather_rows(g, index)}; },
      "scatter_rows");
}

Var dropout(const Var& a, Real p, Rng& rng, bool train) {
  if (!(p >= Real(0) && p < Real(1))) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (!train || p == Real(0)) return a;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Real keep_scale = Real(1) / (Real(1) - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = unit(rng) >= static_cast<double>(p) ? keep_scale : Real(0);
  }
  return mul(a, a.tape().constant(std::move(mask)));
}

Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

Var l2_norm(const Var& a) { return sqrt(dot(a, a)); }

// ---- sparse primitives -------------------------------------------------

Var spmm(const LayoutPtr& layout, bool transposed, const Var& values, const Var& x) {
  const SparseLayout& s = *layout;
  if (values.rows() != static_cast<Eigen::Index>(s.nnz()) || values.cols() != 1) {
    throw ShapeError("spmm: values must be nnz x 1, got " + shape(values));
  }
  const Eigen::Index out_rows = transposed ? s.cols() : s.rows();
  const Eigen::Index in_rows = transposed ? s.rows() : s.cols();
  if (x.rows() != in_rows) throw ShapeError("spmm: dense operand has " + shape(x));

  const Matrix& dense = x.value();
  const Real* val = values.value().data();
  Matrix v = Matrix::Zero(out_rows, dense.cols());
  if (!transposed) {
    for (Eigen::Index r = 0; r < out_rows; ++r) {
      for (auto e = s.row_offsets()[static_cast<std::size_t>(r)]; e < s.row_offsets()[static_cast<std::size_t>(r) + 1]; ++e) {
        v.row(r) += val[e] * dense.row(s.col_indices()[static_cast<std::size_t>(e)]);
      }
    }
  } else {
    for (Eigen::Index r = 0; r < out_rows; ++r) {
      for (auto t = s.t_row_offsets()[static_cast<std::size_t>(r)]; t < s.t_row_offsets()[static_cast<std::size_t>(r) + 1]; ++t) {
        const auto slot = static_cast<std::size_t>(t);
        v.row(r) += val[s.t_entries()[slot]] * dense.row(s.t_col_indices()[slot]);
      }
    }
  }
  return x.tape().record(
      std::move(v), {values, x},
      [layout, transposed, values, x](const Var&, const Var& g) {
        std::vector<Var> r(2);
        if (values.requires_grad()) r[0] = sddmm(layout, transposed, g, x);
        if (x.requires_grad()) r[1] = spmm(layout, !transposed, values, g);
        return r;
      },
      "spmm");
}

Var sddmm(const LayoutPtr& layout, bool transposed, const Var& a, const Var& b) {
  const SparseLayout& s = *layout;
  const Eigen::Index a_rows = transposed ? s.cols() : s.rows();
  const Eigen::Index b_rows = transposed ? s.rows() : s.cols();
  if (a.rows() != a_rows || b.rows() != b_rows || a.cols() != b.cols()) {
    throw ShapeError("sddmm: operands " + shape(a) + " and " + shape(b) + " do not fit the pattern");
  }
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix v(static_cast<Eigen::Index>(s.nnz()), 1);
  const auto& rows = *s.entry_rows();
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    const NodeId i = rows[e];
    const NodeId j = s.col_indices()[e];
    v(static_cast<Eigen::Index>(e), 0) = transposed ? av.row(j).dot(bv.row(i)) : av.row(i).dot(bv.row(j));
  }
  return a.tape().record(
      std::move(v), {a, b},
      [layout, transposed, a, b](const Var&, const Var& g) {
        std::vector<Var> r(2);
        if (a.requires_grad()) r[0] = spmm(layout, transposed, g, b);
        if (b.requires_grad()) r[1] = spmm(layout, !transposed, g, a);
        return r;
      },
      "sddmm");
}

Var segment_softmax(const LayoutPtr& layout, const Var& scores) {
  const SparseLayout& s = *layout;
  if (scores.rows() != static_cast<Eigen::Index>(s.nnz()) || scores.cols() != 1) {
    throw ShapeError("segment_softmax: scores must be nnz x 1, got " + shape(scores));
  }
  const Real* x = scores.value().data();
  Matrix v(scores.rows(), 1);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const auto begin = s.row_offsets()[static_cast<std::size_t>(r)];
    const auto end = s.row_offsets()[static_cast<std::size_t>(r) + 1];
    if (begin == end) continue;
    Real m = -std::numeric_limits<Real>::infinity();
    for (auto e = begin; e < end; ++e) m = std::max(m, x[e]);
    Real total = 0;
    for (auto e = begin; e < end; ++e) {
      v(e, 0) = std::exp(x[e] - m);
      total += v(e, 0);
    }
    for (auto e = begin; e < end; ++e) v(e, 0) /= total;
  }
  const Eigen::Index n = s.rows();
  return scores.tape().record(
      std::move(v), {scores},
      [layout, n](const Var& out, const Var& g) {
        const IndexPtr& rows = layout->entry_rows();
        const Var row_totals = scatter_rows(mul(g, out), rows, n);
        return std::vector<Var>{mul(out, sub(g, gather_rows(row_totals, rows)))};
      },
      "segment_softmax");
}

// ---- initialisation ----------------------------------------------------

Real glorot_bound(Eigen::Index rows, Eigen::Index cols) {
  return std::sqrt(Real(6) / static_cast<Real>(rows + cols));
}

Matrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("glorot_init: dimensions must be positive");
  const Real bound = glorot_bound(rows, cols);
  std::uniform_real_distribution<Real> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix identity_init(Eigen::Index c) {
  if (c <= 0) throw std::invalid_argument("identity_init: dimension must be positive");
  return Matrix::Identity(c, c);
}

}  // namespace enc::ad
