#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace enc {

#ifdef ENC_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

/// Dense row-major matrix used for every node/edge feature table.
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using NodeId = std::int32_t;

using Rng = std::mt19937_64;

/// Raised on shape mismatches and other caller contract violations.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace enc
