#pragma once

#include <map>
#include <vector>

#include "uncage/prompt.hpp"
#include "uncage/types.hpp"

namespace uncage {

// One attention map per subject id, values rescaled to [0,1].
struct AttentionMaps {
  std::map<int, Field> maps;
  int step = 0;
};

// Raw attention as a model emits it: one slice per (block, head), each slice
// holding a per-subject map.
using SubjectMaps = std::map<int, Field>;
using RawAttention = std::vector<SubjectMaps>;

enum class GuidanceMode { Contrastive, PositiveOnly, NegativeOnly };

struct GuidanceConfig {
  double w_a = 3.0;
  int guidance_steps = 16;  // guidance window T_g: active while t <= T_g
  double sigma = 1.0;
  bool blur_enabled = true;
  GuidanceMode mode = GuidanceMode::Contrastive;
};

// Per-subject mean over all (block, head) slices, then min-max rescale to
// [0,1]; a constant mean map rescales to all zeros.
AttentionMaps aggregate_attention(const RawAttention& raw, int step);

// Separable Gaussian convolution, kernel truncated at ceil(3*sigma) taps per
// side and renormalized, replicate boundary padding.
Field gaussian_blur(const Field& map, double sigma);

// Contrastive attention score per position: the best, over objects, of
// (min over the object's positive pairs) - (max over its negative pairs).
// An empty negative set contributes 0. PositiveOnly / NegativeOnly keep the
// respective term alone.
Field contrastive_scores(const AttentionMaps& maps, const PromptSpec& spec,
                         GuidanceMode mode = GuidanceMode::Contrastive);

}  // namespace uncage
