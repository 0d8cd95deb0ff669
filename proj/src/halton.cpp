#include "uncage/halton.hpp"

#include <algorithm>
#include <stdexcept>

namespace uncage {

double radical_inverse(unsigned long long index, int base) {
  if (base < 2) throw std::invalid_argument("radical_inverse: base must be >= 2");
  double inv_base = 1.0 / base;
  double scale = inv_base;
  double result = 0.0;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv_base;
  }
  return result;
}

HaltonOrder halton_order(int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("halton_order: empty grid");

  HaltonOrder out;
  out.height = height;
  out.width = width;
  out.order.reserve(static_cast<size_t>(height) * width);

  std::vector<char> seen(static_cast<size_t>(height) * width, 0);
  size_t remaining = seen.size();
  // The low-discrepancy walk covers the grid long before this bound; the cap
  // just turns a hypothetical coverage failure into an error instead of a hang.
  const unsigned long long max_draws = 64ULL * seen.size();
  for (unsigned long long i = 1; remaining > 0; ++i) {
    if (i > max_draws) throw std::logic_error("halton_order: coverage bound exceeded");
    const double x = radical_inverse(i, 2);
    const double y = radical_inverse(i, 3);
    const int col = std::min(width - 1, static_cast<int>(x * width));
    const int row = std::min(height - 1, static_cast<int>(y * height));
    const size_t flat = static_cast<size_t>(row) * width + col;
    if (!seen[flat]) {
      seen[flat] = 1;
      out.order.push_back({row, col});
      --remaining;
    }
  }
  return out;
}

}  // namespace uncage
