#pragma once

// Central finite-difference oracle. It only ever evaluates the forward value
// of the function under test, so it is independent of the tape's backward
// rules.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "enc/autodiff.hpp"

namespace enc::testing {

using Params = std::vector<Matrix>;
using TapedFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

inline std::vector<ad::Var> bind_all(ad::Tape& tape, const Params& p) {
  std::vector<ad::Var> vars;
  for (const Matrix& m : p) vars.push_back(tape.variable(m));
  return vars;
}

inline double evaluate(const TapedFn& f, const Params& p) {
  ad::Tape tape;
  const auto vars = bind_all(tape, p);
  return static_cast<double>(f(tape, vars).item());
}

inline Params analytic_grad(const TapedFn& f, const Params& p) {
  ad::Tape tape;
  const auto vars = bind_all(tape, p);
  const ad::Var out = f(tape, vars);
  const auto grads = tape.grad(out, vars);
  Params g;
  for (const auto& v : grads) g.push_back(v.value());
  return g;
}

inline Params fd_grad(const TapedFn& f, const Params& p, double h = 1e-5) {
  Params g;
  Params work = p;
  for (std::size_t k = 0; k < p.size(); ++k) {
    Matrix gk(p[k].rows(), p[k].cols());
    for (Eigen::Index r = 0; r < p[k].rows(); ++r) {
      for (Eigen::Index c = 0; c < p[k].cols(); ++c) {
        const Real orig = work[k](r, c);
        work[k](r, c) = orig + static_cast<Real>(h);
        const double up = evaluate(f, work);
        work[k](r, c) = orig - static_cast<Real>(h);
        const double down = evaluate(f, work);
        work[k](r, c) = orig;
        gk(r, c) = static_cast<Real>((up - down) / (2 * h));
      }
    }
    g.push_back(std::move(gk));
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, 1e-12) over all tensors flattened together.
inline double rel_error(const Params& a, const Params& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += static_cast<double>((a[k] - b[k]).squaredNorm());
    na += static_cast<double>(a[k].squaredNorm());
    nb += static_cast<double>(b[k].squaredNorm());
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

inline double gradient_check(const TapedFn& f, const Params& p, double h = 1e-5) {
  return rel_error(analytic_grad(f, p), fd_grad(f, p, h));
}

/// Standard normal matrix with entries pushed away from 0 (|x| >= 1e-3) so
/// relu/abs kinks are not straddled by the difference stencil.
inline Matrix randn(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v = nd(rng);
    while (std::abs(v) < 1e-3) v = nd(rng);
    m.data()[i] = static_cast<Real>(v);
  }
  return m;
}

}  // namespace enc::testing
