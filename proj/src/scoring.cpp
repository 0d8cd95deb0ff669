#include "uncage/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uncage/rng.hpp"

namespace uncage {

GridState GridState::initial(int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("grid dims must be positive");
  GridState s;
  s.tokens = IntGrid::Constant(height, width, -1);
  s.masked = BoolGrid::Constant(height, width, true);
  s.step = 0;
  return s;
}

Field confidence_scores(const Logits& logits, const IntGrid& sampled, const GridState& state) {
  const int h = state.height();
  const int w = state.width();
  if (sampled.rows() != h || sampled.cols() != w) {
    throw std::invalid_argument("confidence_scores: sampled grid shape mismatch");
  }
  if (logits.rows() != static_cast<long>(h) * w) {
    throw std::invalid_argument("confidence_scores: logits row count != H*W");
  }

  Field out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!state.masked(r, c)) {
        out(r, c) = kNegInf;
        continue;
      }
      const int id = sampled(r, c);
      if (id < 0 || id >= logits.cols()) {
        throw std::invalid_argument("confidence_scores: sampled id out of vocab range");
      }
      out(r, c) = logits(r * w + c, id);
    }
  }
  return out;
}

Field gumbel_noise(int height, int width, double tau, std::mt19937_64& rng) {
  if (tau < 0.0) throw std::invalid_argument("gumbel_noise: tau must be >= 0");
  Field out(height, width);
  // Row-major fill so the draw order matches the flat position index.
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out(r, c) = -tau * std::log(-std::log(uniform_open01(rng)));
    }
  }
  return out;
}

namespace {

void check_same_shape(const Field& a, const Field& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("combine_scores: ") + what + " shape mismatch");
  }
}

}  // namespace

Field combine_scores(const Field& f_c, const Field& f_g) {
  check_same_shape(f_c, f_g, "F_c/F_g");
  return f_c + f_g;
}

Field combine_scores(const Field& f_c, const Field& f_g, const Field& f_a, double w_a, int t,
                     int guidance_steps) {
  check_same_shape(f_c, f_g, "F_c/F_g");
  if (w_a == 0.0 || t > guidance_steps) {
    return f_c + f_g;
  }
  check_same_shape(f_c, f_a, "F_c/F_a");
  return f_c + f_g + w_a * f_a;
}

std::vector<Position> select_topk(const Field& scores, const GridState& state, int k) {
  const int h = state.height();
  const int w = state.width();
  if (scores.rows() != h || scores.cols() != w) {
    throw std::invalid_argument("select_topk: score field shape mismatch");
  }
  if (k < 0 || k > state.masked_count()) {
    throw std::invalid_argument("select_topk: k exceeds masked position count");
  }

  struct Entry {
    double score;
    int flat;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(state.masked_count()));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (state.masked(r, c)) entries.push_back({scores(r, c), r * w + c});
    }
  }

  const auto better = [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.flat < b.flat;
  };
  std::partial_sort(entries.begin(), entries.begin() + k, entries.end(), better);

  std::vector<Position> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    out.push_back({entries[i].flat / w, entries[i].flat % w});
  }
  return out;
}

}  // namespace uncage
