#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uncage/prompt.hpp"
#include "uncage/sampler.hpp"
#include "uncage/types.hpp"

namespace uncage {

// One planted object: a disc of cells around `center` that should end up
// carrying this entity's composite token. Subject ids refer to the prompt.
struct SceneEntity {
  int object_id = 0;
  int attribute_id = 0;
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 0.0;
};

// Ground-truth scene plus the knobs of the synthetic predictor built on it.
//
// Vocabulary layout: token 0 is background; entity i owns two composite
// tokens, 1 + 2i (its object with its own attribute) and 2 + 2i (its object
// with the attribute borrowed from entity (i+1) % n, the "leaked" variant).
struct SceneSpec {
  int height = 16;
  int width = 16;
  std::vector<SceneEntity> entities;

  double lambda = 0.7;          // cross-entity attention / logit leakage
  double attn_sigma = 2.0;      // bandwidth of the attention bumps
  // Bandwidth of the rival-evidence bumps inside the logits. Kept wider
  // than attn_sigma: the predictor's early beliefs are diffuse while its
  // attention stays comparatively well localized, which is the regime
  // where unmasking order matters.
  double ambiguity_sigma = 5.5;
  // Gain on the rival evidence. The rival lift saturates at the truth
  // margin (a tie), so contested cells approach coin flips that only
  // committed context can resolve; it still vanishes with lambda.
  double ambiguity_gain = 1.0;
  double margin = 1.0;          // base logit lead of the true token
  double noise_sigma = 0.0;   // std of the per-query logit noise
  double anchor_weight = 0.8; // pull toward tokens already committed nearby
  int anchor_radius = 1;      // Chebyshev neighborhood of that pull

  int vocab_size() const { return 1 + 2 * static_cast<int>(entities.size()); }
  int correct_token(int entity) const;
  int wrong_token(int entity) const;
  // Entity owning a composite token, -1 for background.
  int token_entity(int token) const;
  bool is_wrong_variant(int token) const;
  // Entity whose attribute the wrong variant of `entity` borrows.
  int attribute_donor(int entity) const;
  int entity_of_subject(int subject_id) const;  // -1 if not a scene subject

  int ground_truth_token(int row, int col) const;
  IntGrid ground_truth() const;
  std::vector<Position> region_cells(int entity) const;
};

// Random scene with n well-separated discs plus the matching prompt
// (object i gets exactly one attribute). Centers keep a pairwise distance
// of at least spacing * min(height, width) and stay clear of the borders.
std::pair<SceneSpec, PromptSpec> gen_scene(std::mt19937_64& rng, int height, int width,
                                           int n_objects, double lambda, double spacing);

// Unnormalized Gaussian bump of entity `e`, exp(-d^2 / (2 sigma^2)).
Field entity_bump(const SceneSpec& scene, int entity, double sigma);

// Canonical attention map for a subject: its entity's bump plus lambda
// times every other entity's bump, min-max rescaled to [0, 1]. The grid
// state and step are accepted for interface parity but do not enter.
Field mock_attention(const SceneSpec& scene, const SubjectToken& subject, const GridState& state,
                     int t);

// Per-position logits over the scene vocabulary. The true token leads by
// `margin`; rival composites are lifted toward it in proportion to the
// other entities' bumps; committed neighbors vote via `anchor_weight`; rng
// supplies one Normal(0, noise_sigma) perturbation per (position, token).
Logits mock_logits(const SceneSpec& scene, const GridState& state, int t, std::mt19937_64& rng);

struct SyntheticModelConfig {
  int blocks = 3;
  int heads = 8;
  // Each head sees the scene at its own bandwidth: sigma scaled by a
  // deterministic factor in [1 - jitter, 1 + jitter].
  double bandwidth_jitter = 0.25;
  // Per-head multiplicative map noise, resampled every step.
  double slice_noise = 0.05;
};

// Deterministic mock of a masked generative model over a planted scene.
// Logits follow mock_logits; attention comes out one slice per
// (block, head), each a noisy re-rendering of the canonical subject maps.
class SyntheticModel final : public ModelInterface {
 public:
  SyntheticModel(SceneSpec scene, PromptSpec prompt, std::uint64_t seed,
                 SyntheticModelConfig cfg = {});

  int height() const override { return scene_.height; }
  int width() const override { return scene_.width; }
  int vocab_size() const override { return scene_.vocab_size(); }
  Prediction query(const PromptSpec& spec, const GridState& state, int t) override;

  const SceneSpec& scene() const { return scene_; }
  const PromptSpec& prompt() const { return prompt_; }

 private:
  SceneSpec scene_;
  PromptSpec prompt_;
  std::uint64_t seed_;
  SyntheticModelConfig cfg_;
};

std::string scene_to_json(const SceneSpec& scene, const PromptSpec& prompt);
std::pair<SceneSpec, PromptSpec> scene_from_json(const std::string& text);

}  // namespace uncage
