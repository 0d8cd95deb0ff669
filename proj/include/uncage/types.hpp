#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>

namespace uncage {

// Dense grid types. Grids are indexed (row, col); where a flat position
// index is needed it is row-major: p = row * width + col.
template <typename Scalar>
using FieldT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Field = FieldT<double>;
using IntGrid = FieldT<int>;
using BoolGrid = FieldT<bool>;

// Per-position logits, one row per grid position (row-major), one column
// per vocabulary entry.
using Logits = Field;

struct Position {
  int row = 0;
  int col = 0;

  bool operator==(const Position&) const = default;
};

inline int flat_index(const Position& p, int width) { return p.row * width + p.col; }

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace uncage
