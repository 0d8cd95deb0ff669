#pragma once

#include <random>
#include <vector>

#include "uncage/types.hpp"

namespace uncage {

// Mutable state of a decoding run. Committed token ids are immutable once
// their position is unmasked; positions still masked carry token id -1.
struct GridState {
  IntGrid tokens;
  BoolGrid masked;
  int step = 0;

  static GridState initial(int height, int width);

  int height() const { return static_cast<int>(tokens.rows()); }
  int width() const { return static_cast<int>(tokens.cols()); }
  long long masked_count() const { return masked.cast<long long>().sum(); }
};

// Confidence F_c: the logit of the sampled token at each masked position,
// -inf at unmasked positions. `logits` has one row per position (row-major).
Field confidence_scores(const Logits& logits, const IntGrid& sampled, const GridState& state);

// Ordering noise F_g: -tau * log(-log(U)) with U uniform on (0,1).
Field gumbel_noise(int height, int width, double tau, std::mt19937_64& rng);

// F = F_c + F_g; guidance (if any) is handled by the overload below.
Field combine_scores(const Field& f_c, const Field& f_g);

// F = F_c + F_g + w_a * F_a while t <= guidance_steps, else F_c + F_g.
// F_a may be empty whenever the guidance term is inactive.
Field combine_scores(const Field& f_c, const Field& f_g, const Field& f_a, double w_a, int t,
                     int guidance_steps);

// The k masked positions with the largest scores, ordered by descending
// score with ties broken by ascending row-major index. Unmasked positions
// are never candidates regardless of their score value.
std::vector<Position> select_topk(const Field& scores, const GridState& state, int k);

}  // namespace uncage
