#include "uncage/synthmgt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "uncage/rng.hpp"

namespace uncage {
namespace {

using nlohmann::json;

constexpr std::uint64_t kTagBandwidth = 0x62616e64;  // "band"
constexpr std::uint64_t kTagSliceNoise = 0x736c6963;  // "slic"
constexpr std::uint64_t kTagQuery = 0x71756572;       // "quer"

double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

Field rescale_unit(const Field& m) {
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (hi - lo <= 0.0) return Field::Zero(m.rows(), m.cols());
  return (m - lo) / (hi - lo);
}

void check_scene(const SceneSpec& scene) {
  if (scene.height <= 0 || scene.width <= 0) throw std::invalid_argument("scene: empty grid");
  if (scene.lambda < 0.0 || scene.lambda > 1.0)
    throw std::invalid_argument("scene: lambda outside [0, 1]");
  if (scene.attn_sigma <= 0.0) throw std::invalid_argument("scene: attn_sigma must be positive");
  if (scene.ambiguity_sigma <= 0.0)
    throw std::invalid_argument("scene: ambiguity_sigma must be positive");
  if (scene.ambiguity_gain < 0.0)
    throw std::invalid_argument("scene: negative ambiguity_gain");
  if (scene.noise_sigma < 0.0) throw std::invalid_argument("scene: negative noise_sigma");
  if (scene.anchor_radius < 0) throw std::invalid_argument("scene: negative anchor_radius");
  for (const SceneEntity& e : scene.entities) {
    if (e.center_row < 0 || e.center_row > scene.height - 1 || e.center_col < 0 ||
        e.center_col > scene.width - 1)
      throw std::invalid_argument("scene: entity center outside grid");
    if (e.radius <= 0.0) throw std::invalid_argument("scene: entity radius must be positive");
  }
}

}  // namespace

int SceneSpec::correct_token(int entity) const { return 1 + 2 * entity; }

int SceneSpec::wrong_token(int entity) const { return 2 + 2 * entity; }

int SceneSpec::token_entity(int token) const {
  if (token <= 0 || token >= vocab_size()) return -1;
  return (token - 1) / 2;
}

bool SceneSpec::is_wrong_variant(int token) const {
  return token > 0 && token < vocab_size() && (token - 1) % 2 == 1;
}

int SceneSpec::attribute_donor(int entity) const {
  const int n = static_cast<int>(entities.size());
  return n == 0 ? -1 : (entity + 1) % n;
}

int SceneSpec::entity_of_subject(int subject_id) const {
  for (int i = 0; i < static_cast<int>(entities.size()); ++i)
    if (entities[i].object_id == subject_id || entities[i].attribute_id == subject_id) return i;
  return -1;
}

int SceneSpec::ground_truth_token(int row, int col) const {
  int best = -1;
  double best_d2 = 0.0;
  for (int i = 0; i < static_cast<int>(entities.size()); ++i) {
    const SceneEntity& e = entities[i];
    const double dr = row - e.center_row;
    const double dc = col - e.center_col;
    const double d2 = dr * dr + dc * dc;
    if (d2 <= e.radius * e.radius && (best < 0 || d2 < best_d2)) {
      best = i;
      best_d2 = d2;
    }
  }
  return best < 0 ? 0 : correct_token(best);
}

IntGrid SceneSpec::ground_truth() const {
  IntGrid g(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) g(r, c) = ground_truth_token(r, c);
  return g;
}

std::vector<Position> SceneSpec::region_cells(int entity) const {
  const SceneEntity& e = entities.at(static_cast<std::size_t>(entity));
  std::vector<Position> cells;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double dr = r - e.center_row;
      const double dc = c - e.center_col;
      if (dr * dr + dc * dc <= e.radius * e.radius) cells.push_back({r, c});
    }
  return cells;
}

std::pair<SceneSpec, PromptSpec> gen_scene(std::mt19937_64& rng, int height, int width,
                                           int n_objects, double lambda, double spacing) {
  if (n_objects < 1) throw std::invalid_argument("gen_scene: need at least one object");
  SceneSpec scene;
  scene.height = height;
  scene.width = width;
  scene.lambda = lambda;
  const int side = std::min(height, width);
  const double radius = std::max(2.0, 0.2 * side);
  const int border = static_cast<int>(std::ceil(radius));
  if (height - 1 - 2 * border < 0 || width - 1 - 2 * border < 0)
    throw std::invalid_argument("gen_scene: grid too small for object radius");
  const double min_dist = spacing * side;

  std::uniform_int_distribution<int> row_dist(border, height - 1 - border);
  std::uniform_int_distribution<int> col_dist(border, width - 1 - border);
  std::vector<std::pair<int, int>> centers;
  bool placed = false;
  for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
    centers.clear();
    for (int i = 0; i < n_objects; ++i) centers.emplace_back(row_dist(rng), col_dist(rng));
    placed = true;
    for (std::size_t a = 0; a + 1 < centers.size() && placed; ++a)
      for (std::size_t b = a + 1; b < centers.size() && placed; ++b) {
        const double dr = centers[a].first - centers[b].first;
        const double dc = centers[a].second - centers[b].second;
        if (std::sqrt(dr * dr + dc * dc) < min_dist) placed = false;
      }
  }
  if (!placed) throw std::runtime_error("gen_scene: could not place objects this far apart");

  std::vector<ObjectSpec> objects;
  for (int i = 0; i < n_objects; ++i)
    objects.push_back({"obj" + std::to_string(i), {"attr" + std::to_string(i)}});
  PromptSpec prompt = build_prompt_spec(objects);

  for (int i = 0; i < n_objects; ++i) {
    SceneEntity e;
    // build_prompt_spec numbers subjects in declaration order: object, then
    // its single attribute, so entity i maps to ids 2i and 2i + 1.
    e.object_id = 2 * i;
    e.attribute_id = 2 * i + 1;
    e.center_row = centers[static_cast<std::size_t>(i)].first;
    e.center_col = centers[static_cast<std::size_t>(i)].second;
    e.radius = radius;
    scene.entities.push_back(e);
  }
  check_scene(scene);
  return {scene, prompt};
}

Field entity_bump(const SceneSpec& scene, int entity, double sigma) {
  const SceneEntity& e = scene.entities.at(static_cast<std::size_t>(entity));
  Eigen::ArrayXd rows = Eigen::ArrayXd::LinSpaced(scene.height, 0.0, scene.height - 1.0);
  Eigen::ArrayXd cols = Eigen::ArrayXd::LinSpaced(scene.width, 0.0, scene.width - 1.0);
  Eigen::ArrayXd r2 = (rows - e.center_row).square();
  Eigen::ArrayXd c2 = (cols - e.center_col).square();
  Field d2 = r2.replicate(1, scene.width).rowwise() + c2.transpose();
  return (-d2 / (2.0 * sigma * sigma)).exp();
}

namespace {

// Attention map of one entity at a given bandwidth: own bump plus lambda
// times the rivals', before any rescaling.
Field leaky_bump(const SceneSpec& scene, int entity, double sigma) {
  Field m = entity_bump(scene, entity, sigma);
  for (int other = 0; other < static_cast<int>(scene.entities.size()); ++other)
    if (other != entity) m += scene.lambda * entity_bump(scene, other, sigma);
  return m;
}

}  // namespace

Field mock_attention(const SceneSpec& scene, const SubjectToken& subject, const GridState& state,
                     int t) {
  (void)state;
  (void)t;
  check_scene(scene);
  const int entity = scene.entity_of_subject(subject.id);
  if (entity < 0) throw std::invalid_argument("mock_attention: subject not in scene");
  return rescale_unit(leaky_bump(scene, entity, scene.attn_sigma));
}

Logits mock_logits(const SceneSpec& scene, const GridState& state, int t, std::mt19937_64& rng) {
  (void)t;
  check_scene(scene);
  const int h = scene.height;
  const int w = scene.width;
  if (state.height() != h || state.width() != w)
    throw std::invalid_argument("mock_logits: state does not match scene grid");
  const int vocab = scene.vocab_size();
  const int n = static_cast<int>(scene.entities.size());

  std::vector<Field> bumps;
  for (int e = 0; e < n; ++e) bumps.push_back(entity_bump(scene, e, scene.ambiguity_sigma));
  const IntGrid truth = scene.ground_truth();

  const double neighborhood =
      std::pow(2.0 * scene.anchor_radius + 1.0, 2.0) - 1.0;
  std::normal_distribution<double> noise(0.0, scene.noise_sigma);

  Logits logits(static_cast<Eigen::Index>(h) * w, vocab);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Eigen::Index p = static_cast<Eigen::Index>(r) * w + c;
      const int own = scene.token_entity(truth(r, c));

      for (int v = 0; v < vocab; ++v) {
        double base = 0.0;
        if (v == truth(r, c)) {
          base = scene.margin;
        } else if (v > 0) {
          const int obj = scene.token_entity(v);
          const int attr = scene.is_wrong_variant(v) ? scene.attribute_donor(obj) : obj;
          const double b_obj = obj == own ? 0.0 : bumps[static_cast<std::size_t>(obj)](r, c);
          const double b_attr = attr == own ? 0.0 : bumps[static_cast<std::size_t>(attr)](r, c);
          const double lift =
              scene.ambiguity_gain * scene.lambda * 0.5 * (b_obj + b_attr);
          base = scene.margin * std::min(1.0, lift);
        }
        logits(p, v) = base;
      }

      if (scene.anchor_radius > 0 && neighborhood > 0) {
        for (int dr = -scene.anchor_radius; dr <= scene.anchor_radius; ++dr)
          for (int dc = -scene.anchor_radius; dc <= scene.anchor_radius; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nr = r + dr;
            const int nc = c + dc;
            if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
            if (state.masked(nr, nc)) continue;
            const int v = state.tokens(nr, nc);
            if (v >= 0 && v < vocab) logits(p, v) += scene.anchor_weight / neighborhood;
          }
      }

      if (scene.noise_sigma > 0.0)
        for (int v = 0; v < vocab; ++v) logits(p, v) += noise(rng);
    }
  return logits;
}

SyntheticModel::SyntheticModel(SceneSpec scene, PromptSpec prompt, std::uint64_t seed,
                               SyntheticModelConfig cfg)
    : scene_(std::move(scene)), prompt_(std::move(prompt)), seed_(seed), cfg_(cfg) {
  check_scene(scene_);
  if (cfg_.blocks < 1 || cfg_.heads < 1)
    throw std::invalid_argument("SyntheticModel: need at least one block and head");
  if (cfg_.bandwidth_jitter < 0.0 || cfg_.bandwidth_jitter >= 1.0)
    throw std::invalid_argument("SyntheticModel: bandwidth_jitter outside [0, 1)");
  if (cfg_.slice_noise < 0.0 || cfg_.slice_noise >= 1.0)
    throw std::invalid_argument("SyntheticModel: slice_noise outside [0, 1)");
  for (const SceneEntity& e : scene_.entities) {
    prompt_.subject(e.object_id);
    prompt_.subject(e.attribute_id);
  }
  // Every prompt subject must be renderable, or query() could never serve it.
  for (const SubjectToken& s : prompt_.subjects)
    if (scene_.entity_of_subject(s.id) < 0)
      throw std::invalid_argument("SyntheticModel: scene/prompt subject mismatch");
}

Prediction SyntheticModel::query(const PromptSpec& spec, const GridState& state, int t) {
  Prediction pred;
  std::mt19937_64 logit_rng(mix64(seed_, kTagQuery, static_cast<std::uint64_t>(t)));
  pred.logits = mock_logits(scene_, state, t, logit_rng);

  const int n = static_cast<int>(scene_.entities.size());
  pred.attention.reserve(static_cast<std::size_t>(cfg_.blocks) * cfg_.heads);
  for (int b = 0; b < cfg_.blocks; ++b)
    for (int hd = 0; hd < cfg_.heads; ++hd) {
      const std::uint64_t slice_id =
          (static_cast<std::uint64_t>(b) << 32) | static_cast<std::uint64_t>(hd);
      const double u = to_unit(mix64(seed_, kTagBandwidth, slice_id));
      const double sigma =
          scene_.attn_sigma * (1.0 - cfg_.bandwidth_jitter + 2.0 * cfg_.bandwidth_jitter * u);

      std::vector<Field> per_entity;
      for (int e = 0; e < n; ++e) per_entity.push_back(leaky_bump(scene_, e, sigma));

      std::mt19937_64 slice_rng(
          mix64(seed_, kTagSliceNoise, mix64(static_cast<std::uint64_t>(t), slice_id)));
      SubjectMaps maps;
      for (const SubjectToken& s : spec.subjects) {
        const int e = scene_.entity_of_subject(s.id);
        if (e < 0) throw std::invalid_argument("SyntheticModel: subject not in scene");
        Field m = per_entity[static_cast<std::size_t>(e)];
        if (cfg_.slice_noise > 0.0)
          for (Eigen::Index i = 0; i < m.size(); ++i)
            m(i) *= 1.0 + cfg_.slice_noise * (2.0 * uniform_open01(slice_rng) - 1.0);
        maps.emplace(s.id, rescale_unit(m));
      }
      pred.attention.push_back(std::move(maps));
    }
  return pred;
}

std::string scene_to_json(const SceneSpec& scene, const PromptSpec& prompt) {
  json j;
  j["height"] = scene.height;
  j["width"] = scene.width;
  j["lambda"] = scene.lambda;
  j["attn_sigma"] = scene.attn_sigma;
  j["ambiguity_sigma"] = scene.ambiguity_sigma;
  j["ambiguity_gain"] = scene.ambiguity_gain;
  j["margin"] = scene.margin;
  j["noise_sigma"] = scene.noise_sigma;
  j["anchor_weight"] = scene.anchor_weight;
  j["anchor_radius"] = scene.anchor_radius;
  j["entities"] = json::array();
  for (const SceneEntity& e : scene.entities)
    j["entities"].push_back({{"object_id", e.object_id},
                             {"attribute_id", e.attribute_id},
                             {"center", {e.center_row, e.center_col}},
                             {"radius", e.radius}});
  j["prompt"] = json::parse(prompt_to_json(prompt));
  return j.dump(2);
}

std::pair<SceneSpec, PromptSpec> scene_from_json(const std::string& text) {
  const json j = json::parse(text);
  SceneSpec scene;
  scene.height = j.at("height").get<int>();
  scene.width = j.at("width").get<int>();
  scene.lambda = j.at("lambda").get<double>();
  scene.attn_sigma = j.at("attn_sigma").get<double>();
  scene.ambiguity_sigma = j.at("ambiguity_sigma").get<double>();
  scene.ambiguity_gain = j.at("ambiguity_gain").get<double>();
  scene.margin = j.at("margin").get<double>();
  scene.noise_sigma = j.at("noise_sigma").get<double>();
  scene.anchor_weight = j.at("anchor_weight").get<double>();
  scene.anchor_radius = j.at("anchor_radius").get<int>();
  for (const json& je : j.at("entities")) {
    SceneEntity e;
    e.object_id = je.at("object_id").get<int>();
    e.attribute_id = je.at("attribute_id").get<int>();
    e.center_row = je.at("center").at(0).get<double>();
    e.center_col = je.at("center").at(1).get<double>();
    e.radius = je.at("radius").get<double>();
    scene.entities.push_back(e);
  }
  check_scene(scene);
  PromptSpec prompt = prompt_from_json(j.at("prompt").dump());
  return {scene, prompt};
}

}  // namespace uncage
