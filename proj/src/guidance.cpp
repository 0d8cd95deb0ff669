#include "uncage/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace uncage {

AttentionMaps aggregate_attention(const RawAttention& raw, int step) {
  if (raw.empty()) throw std::invalid_argument("aggregate_attention: no slices");

  const SubjectMaps& first = raw.front();
  if (first.empty()) throw std::invalid_argument("aggregate_attention: slice has no subjects");

  AttentionMaps out;
  out.step = step;
  for (const auto& [subject, map0] : first) {
    Field acc = Field::Zero(map0.rows(), map0.cols());
    for (const auto& slice : raw) {
      auto it = slice.find(subject);
      if (it == slice.end()) {
        throw std::invalid_argument("aggregate_attention: slices disagree on subject set");
      }
      if (it->second.rows() != acc.rows() || it->second.cols() != acc.cols()) {
        throw std::invalid_argument("aggregate_attention: slice shape mismatch");
      }
      acc += it->second;
    }
    acc /= static_cast<double>(raw.size());

    const double lo = acc.minCoeff();
    const double hi = acc.maxCoeff();
    if (hi > lo) {
      out.maps[subject] = (acc - lo) / (hi - lo);
    } else {
      out.maps[subject] = Field::Zero(acc.rows(), acc.cols());
    }
  }
  for (const auto& slice : raw) {
    if (slice.size() != first.size()) {
      throw std::invalid_argument("aggregate_attention: slices disagree on subject set");
    }
  }
  return out;
}

Field gaussian_blur(const Field& map, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  if (h < 1 || w < 1) throw std::invalid_argument("gaussian_blur: empty map");

  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd kernel(2 * half + 1);
  for (int i = -half; i <= half; ++i) {
    kernel(i + half) = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
  }
  kernel /= kernel.sum();

  // Horizontal pass over a column-replicated pad, as a sum of shifted blocks.
  Field padded(h, w + 2 * half);
  padded.middleCols(half, w) = map;
  for (int i = 0; i < half; ++i) {
    padded.col(i) = map.col(0);
    padded.col(half + w + i) = map.col(w - 1);
  }
  Field tmp = Field::Zero(h, w);
  for (int s = 0; s < 2 * half + 1; ++s) {
    tmp += kernel(s) * padded.middleCols(s, w);
  }

  // Vertical pass.
  Field padded2(h + 2 * half, w);
  padded2.middleRows(half, h) = tmp;
  for (int i = 0; i < half; ++i) {
    padded2.row(i) = tmp.row(0);
    padded2.row(half + h + i) = tmp.row(h - 1);
  }
  Field out = Field::Zero(h, w);
  for (int s = 0; s < 2 * half + 1; ++s) {
    out += kernel(s) * padded2.middleRows(s, h);
  }
  return out;
}

Field contrastive_scores(const AttentionMaps& maps, const PromptSpec& spec, GuidanceMode mode) {
  if (spec.objects.empty()) throw std::invalid_argument("contrastive_scores: no objects");

  const auto subject_map = [&](int id) -> const Field& {
    auto it = maps.maps.find(id);
    if (it == maps.maps.end()) {
      throw std::invalid_argument("contrastive_scores: missing map for subject " +
                                  std::to_string(id));
    }
    return it->second;
  };

  Field best;
  for (int o : spec.objects) {
    const auto& pos_ids = spec.positive_pairs.at(o);
    const auto& neg_ids = spec.negative_pairs.at(o);

    Field positive;
    if (mode != GuidanceMode::NegativeOnly) {
      for (int p : pos_ids) {
        const Field& m = subject_map(p);
        if (positive.size() == 0) {
          positive = m;
        } else {
          positive = positive.min(m);
        }
      }
    }
    Field negative;
    if (mode != GuidanceMode::PositiveOnly && !neg_ids.empty()) {
      for (int n : neg_ids) {
        const Field& m = subject_map(n);
        if (negative.size() == 0) {
          negative = m;
        } else {
          negative = negative.max(m);
        }
      }
    }

    Field score;
    if (positive.size() && negative.size()) {
      score = positive - negative;
    } else if (positive.size()) {
      score = positive;  // covers PositiveOnly and the empty-negative case
    } else if (negative.size()) {
      score = -negative;
    } else {
      const Field& any = subject_map(o);
      score = Field::Zero(any.rows(), any.cols());
    }

    if (best.size() == 0) {
      best = score;
    } else {
      best = best.max(score);
    }
  }
  return best;
}

}  // namespace uncage
