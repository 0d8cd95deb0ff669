#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "uncage/guidance.hpp"
#include "uncage/prompt.hpp"
#include "uncage/rng.hpp"

using namespace uncage;

namespace {

Field random_map(int h, int w, std::mt19937_64& rng) {
  Field m(h, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = uniform_open01(rng);
  return m;
}

// Straight-line re-statement of the score definition, pair sets enumerated
// explicitly per cell. The production code vectorizes; this does not.
Field reference_scores(const AttentionMaps& maps, const PromptSpec& spec, GuidanceMode mode) {
  const Field& first = maps.maps.begin()->second;
  Field best = Field::Constant(first.rows(), first.cols(), -1e300);
  for (int o : spec.objects) {
    Field score(first.rows(), first.cols());
    for (Eigen::Index i = 0; i < score.size(); ++i) {
      double pos = 1e300;
      if (mode != GuidanceMode::NegativeOnly)
        for (int p : spec.positive_pairs.at(o)) pos = std::min(pos, maps.maps.at(p)(i));
      double neg = 0.0;
      bool has_neg = false;
      if (mode != GuidanceMode::PositiveOnly)
        for (int n : spec.negative_pairs.at(o)) {
          neg = has_neg ? std::max(neg, maps.maps.at(n)(i)) : maps.maps.at(n)(i);
          has_neg = true;
        }
      if (mode == GuidanceMode::NegativeOnly)
        score(i) = has_neg ? -neg : 0.0;
      else
        score(i) = pos - (has_neg ? neg : 0.0);
    }
    best = best.max(score);
  }
  return best;
}

}  // namespace

TEST_SUITE("guidance") {

TEST_CASE("aggregation averages slices then rescales once") {
  SubjectMaps a{{0, Field::Zero(1, 2)}};
  a.at(0) << 0.0, 1.0;
  SubjectMaps b{{0, Field::Zero(1, 2)}};
  b.at(0) << 1.0, 0.0;

  // the mean is constant, so the degenerate rescale gives zeros
  const AttentionMaps out = aggregate_attention({a, b}, 3);
  CHECK(out.step == 3);
  CHECK((out.maps.at(0) == 0.0).all());
}

TEST_CASE("three slices average per cell") {
  const auto slice = [](double v) {
    SubjectMaps s;
    Field m(1, 3);
    m << v, 0.0, 1.0;  // anchor cells pin the rescale to the identity
    s.emplace(0, m);
    return s;
  };
  const AttentionMaps out = aggregate_attention({slice(0.2), slice(0.4), slice(0.6)}, 0);
  CHECK(out.maps.at(0)(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.maps.at(0)(0, 1) == 0.0);
  CHECK(out.maps.at(0)(0, 2) == 1.0);
}

TEST_CASE("a single slice comes back affinely rescaled to [0,1]") {
  Field m(2, 2);
  m << 0.2, 0.6,
       0.4, 1.0;
  const AttentionMaps out = aggregate_attention({SubjectMaps{{7, m}}}, 1);
  const Field& r = out.maps.at(7);
  CHECK(r.minCoeff() == 0.0);
  CHECK(r.maxCoeff() == 1.0);
  CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("aggregation rejects inconsistent slice sets") {
  SubjectMaps a{{0, Field::Zero(2, 2)}};
  SubjectMaps two{{0, Field::Zero(2, 2)}, {1, Field::Zero(2, 2)}};
  SubjectMaps wrong_shape{{0, Field::Zero(3, 2)}};
  CHECK_THROWS_AS(aggregate_attention({}, 0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_attention({a, two}, 0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_attention({a, wrong_shape}, 0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_attention({SubjectMaps{}}, 0), std::invalid_argument);
}

TEST_CASE("blur preserves constants and sums to one") {
  const Field c = Field::Constant(9, 7, 0.37);
  const Field out = gaussian_blur(c, 2.0);
  CHECK(((out - 0.37).abs() < 1e-12).all());
  CHECK_THROWS_AS(gaussian_blur(c, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blur(Field(), 1.0), std::invalid_argument);
}

TEST_CASE("blurred impulse peaks at the squared kernel center") {
  Field m = Field::Zero(31, 31);
  m(15, 15) = 1.0;
  const Field out = gaussian_blur(m, 2.0);

  const int half = static_cast<int>(std::ceil(3.0 * 2.0));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) sum += std::exp(-(i * i) / (2.0 * 2.0 * 2.0));
  const double g0 = 1.0 / sum;
  CHECK(out(15, 15) == doctest::Approx(g0 * g0).epsilon(1e-12));
  // far from the impulse the 3-sigma kernel never reaches
  CHECK(out(0, 0) == 0.0);
}

TEST_CASE("blur is linear") {
  auto rng = make_rng(17, kStreamModel);
  const Field x = random_map(12, 9, rng);
  const Field y = random_map(12, 9, rng);
  const Field lhs = gaussian_blur(2.0 * x + 0.5 * y, 1.3);
  const Field rhs = 2.0 * gaussian_blur(x, 1.3) + 0.5 * gaussian_blur(y, 1.3);
  CHECK(((lhs - rhs).abs() < 1e-10).all());
}

TEST_CASE("blur commutes with a horizontal flip") {
  auto rng = make_rng(18, kStreamModel);
  const Field x = random_map(8, 11, rng);
  const Field flipped = x.rowwise().reverse();
  const Field a = gaussian_blur(flipped, 1.7);
  const Field b = gaussian_blur(x, 1.7).rowwise().reverse();
  CHECK(((a - b).abs() < 1e-14).all());
}

TEST_CASE("two objects with attributes, worked 2x2 grid") {
  const PromptSpec spec = build_prompt_spec({{"o1", {"a1"}}, {"o2", {"a2"}}});
  AttentionMaps maps;
  maps.maps[0] = Field(2, 2);  // o1
  maps.maps[0] << 0.9, 0.1, 0.2, 0.1;
  maps.maps[1] = Field(2, 2);  // a1
  maps.maps[1] << 0.8, 0.2, 0.1, 0.1;
  maps.maps[2] = Field(2, 2);  // o2
  maps.maps[2] << 0.1, 0.7, 0.1, 0.1;
  maps.maps[3] = Field(2, 2);  // a2
  maps.maps[3] << 0.2, 0.8, 0.1, 0.2;

  const Field fa = contrastive_scores(maps, spec);
  CHECK(fa(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(fa(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fa(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fa(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two attribute-free objects reduce to an absolute difference") {
  const PromptSpec spec = build_prompt_spec({{"o1", {}}, {"o2", {}}});
  auto rng = make_rng(23, kStreamModel);
  for (int trial = 0; trial < 50; ++trial) {
    AttentionMaps maps;
    maps.maps[0] = random_map(6, 6, rng);
    maps.maps[1] = random_map(6, 6, rng);
    const Field fa = contrastive_scores(maps, spec);
    const Field expected = (maps.maps.at(0) - maps.maps.at(1)).abs();
    CHECK(((fa - expected).abs() <= 1e-12).all());
    CHECK((fa >= 0.0).all());
  }
}

TEST_CASE("a single object with no attributes keeps its own map") {
  const PromptSpec spec = build_prompt_spec({{"solo", {}}});
  auto rng = make_rng(29, kStreamModel);
  AttentionMaps maps;
  maps.maps[0] = random_map(4, 5, rng);
  const Field fa = contrastive_scores(maps, spec);
  CHECK((fa == maps.maps.at(0)).all());
}

TEST_CASE("scores stay within [-1, 1] for maps in [0, 1]") {
  const PromptSpec spec = build_prompt_spec({{"x", {"a"}}, {"y", {"b"}}, {"z", {}}});
  auto rng = make_rng(31, kStreamModel);
  for (int trial = 0; trial < 20; ++trial) {
    AttentionMaps maps;
    for (const auto& s : spec.subjects) maps.maps[s.id] = random_map(5, 5, rng);
    for (GuidanceMode mode :
         {GuidanceMode::Contrastive, GuidanceMode::PositiveOnly, GuidanceMode::NegativeOnly}) {
      const Field fa = contrastive_scores(maps, spec, mode);
      CHECK((fa >= -1.0).all());
      CHECK((fa <= 1.0).all());
    }
  }
}

TEST_CASE("relabeling objects leaves the field unchanged") {
  const PromptSpec spec = build_prompt_spec({{"p", {"u"}}, {"q", {"v"}}});
  const PromptSpec relabeled = build_prompt_spec({{"q", {"v"}}, {"p", {"u"}}});
  auto rng = make_rng(37, kStreamModel);
  AttentionMaps maps;
  for (const auto& s : spec.subjects) maps.maps[s.id] = random_map(7, 7, rng);

  // ids swap roles: p,u were 0,1 and become 2,3
  AttentionMaps swapped;
  swapped.maps[0] = maps.maps.at(2);
  swapped.maps[1] = maps.maps.at(3);
  swapped.maps[2] = maps.maps.at(0);
  swapped.maps[3] = maps.maps.at(1);

  const Field a = contrastive_scores(maps, spec);
  const Field b = contrastive_scores(swapped, relabeled);
  CHECK((a == b).all());
}

TEST_CASE("matches the enumeration reference on random prompts") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> n_obj(1, 4);
  std::uniform_int_distribution<int> n_attr(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ObjectSpec> objs;
    const int n = n_obj(rng);
    for (int o = 0; o < n; ++o) {
      ObjectSpec os;
      os.first = "o" + std::to_string(trial) + "_" + std::to_string(o);
      const int a = n_attr(rng);
      for (int i = 0; i < a; ++i) os.second.push_back(os.first + "a" + std::to_string(i));
      objs.push_back(os);
    }
    const PromptSpec spec = build_prompt_spec(objs);
    AttentionMaps maps;
    for (const auto& s : spec.subjects) maps.maps[s.id] = random_map(4, 4, rng);
    for (GuidanceMode mode :
         {GuidanceMode::Contrastive, GuidanceMode::PositiveOnly, GuidanceMode::NegativeOnly}) {
      const Field got = contrastive_scores(maps, spec, mode);
      const Field want = reference_scores(maps, spec, mode);
      CHECK(((got - want).abs() <= 1e-12).all());
    }
  }
}

TEST_CASE("positive-only and negative-only keep a single term") {
  const PromptSpec spec = build_prompt_spec({{"o1", {"a1"}}, {"o2", {}}});
  auto rng = make_rng(43, kStreamModel);
  AttentionMaps maps;
  for (const auto& s : spec.subjects) maps.maps[s.id] = random_map(3, 3, rng);

  const Field pos = contrastive_scores(maps, spec, GuidanceMode::PositiveOnly);
  const Field neg = contrastive_scores(maps, spec, GuidanceMode::NegativeOnly);
  const Field m0 = maps.maps.at(0), m1 = maps.maps.at(1), m2 = maps.maps.at(2);
  CHECK((pos == m0.min(m1).max(m2)).all());
  CHECK((neg == (-m2).max(-m0.max(m1))).all());
}

TEST_CASE("a missing subject map is a contract violation") {
  const PromptSpec spec = build_prompt_spec({{"o1", {"a1"}}});
  AttentionMaps maps;
  maps.maps[0] = Field::Zero(2, 2);
  CHECK_THROWS_AS(contrastive_scores(maps, spec), std::invalid_argument);
  CHECK_THROWS_AS(contrastive_scores(maps, PromptSpec{}), std::invalid_argument);
}

}  // TEST_SUITE
