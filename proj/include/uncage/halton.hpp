#pragma once

#include <vector>

#include "uncage/types.hpp"

namespace uncage {

// An input-independent unmasking order covering every cell of an HxW grid
// exactly once, built from the base-(2,3) Halton sequence.
struct HaltonOrder {
  int height = 0;
  int width = 0;
  std::vector<Position> order;
};

// Digit reversal of `index` in `base`, mapped below the radix point.
double radical_inverse(unsigned long long index, int base);

// Walks Halton points (base 2 -> column, base 3 -> row) starting at index 1
// and appends each newly hit cell until the grid is covered.
HaltonOrder halton_order(int height, int width);

}  // namespace uncage
