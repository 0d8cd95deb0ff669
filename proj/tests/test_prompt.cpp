#include <doctest.h>

#include <stdexcept>

#include "uncage/prompt.hpp"

using namespace uncage;

namespace {

PromptSpec two_object_spec() {
  return build_prompt_spec({{"cat", {"black"}}, {"dog", {"white"}}});
}

}  // namespace

TEST_SUITE("prompt") {

TEST_CASE("ids are assigned in declaration order, object then attributes") {
  const PromptSpec spec = two_object_spec();
  REQUIRE(spec.subjects.size() == 4);
  CHECK(spec.subject(0).label == "cat");
  CHECK(spec.subject(0).kind == SubjectKind::Object);
  CHECK(spec.subject(1).label == "black");
  CHECK(spec.subject(1).kind == SubjectKind::Attribute);
  CHECK(spec.subject(2).label == "dog");
  CHECK(spec.subject(3).label == "white");
  CHECK(spec.objects == std::set<int>{0, 2});
  CHECK(spec.attributes == std::set<int>{1, 3});
}

TEST_CASE("positive set is self plus own attributes, negative set is the rest") {
  const PromptSpec spec = two_object_spec();
  CHECK(spec.positive_pairs.at(0) == std::set<int>{0, 1});
  CHECK(spec.negative_pairs.at(0) == std::set<int>{2, 3});
  CHECK(spec.positive_pairs.at(2) == std::set<int>{2, 3});
  CHECK(spec.negative_pairs.at(2) == std::set<int>{0, 1});
  CHECK(validate(spec).empty());
}

TEST_CASE("an attribute-free object has an empty positive remainder but keeps itself") {
  const PromptSpec spec = build_prompt_spec({{"apple", {}}});
  CHECK(spec.positive_pairs.at(0) == std::set<int>{0});
  CHECK(spec.negative_pairs.at(0).empty());
  CHECK(validate(spec).empty());
}

TEST_CASE("construction rejects bad inputs") {
  CHECK_THROWS_AS(build_prompt_spec({}), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt_spec({{"", {}}}), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt_spec({{"a", {""}}}), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt_spec({{"a", {}}, {"a", {}}}), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt_spec({{"a", {"x"}}, {"b", {"x"}}}), std::invalid_argument);
}

TEST_CASE("validate flags a positive set missing its own object") {
  PromptSpec spec = two_object_spec();
  spec.positive_pairs.at(0).erase(0);
  bool found = false;
  for (const auto& v : validate(spec))
    if (v.message == "positive set missing self" && v.subject_ids == std::vector<int>{0})
      found = true;
  CHECK(found);
}

TEST_CASE("validate flags overlapping pair sets") {
  PromptSpec spec = two_object_spec();
  spec.negative_pairs.at(0).insert(1);  // 1 is already positive for object 0
  bool found = false;
  for (const auto& v : validate(spec))
    if (v.message == "positive and negative sets overlap") found = true;
  CHECK(found);
}

TEST_CASE("validate flags pair sets that do not partition the subjects") {
  PromptSpec spec = two_object_spec();
  spec.negative_pairs.at(0).erase(3);
  bool found = false;
  for (const auto& v : validate(spec))
    if (v.message == "pair sets do not partition the subject set") found = true;
  CHECK(found);
}

TEST_CASE("validate flags an id that is both object and attribute") {
  PromptSpec spec = two_object_spec();
  spec.attributes.insert(0);
  bool found = false;
  for (const auto& v : validate(spec))
    if (v.message == "subject is both object and attribute") found = true;
  CHECK(found);
}

TEST_CASE("json round trip preserves structure") {
  const PromptSpec spec = build_prompt_spec({{"apple", {"pink", "small"}}, {"pear", {}}});
  const PromptSpec back = prompt_from_json(prompt_to_json(spec));
  REQUIRE(back.subjects.size() == spec.subjects.size());
  for (const auto& s : spec.subjects) {
    CHECK(back.subject(s.id).label == s.label);
    CHECK(back.subject(s.id).kind == s.kind);
  }
  CHECK(back.objects == spec.objects);
  CHECK(back.positive_pairs == spec.positive_pairs);
  CHECK(back.negative_pairs == spec.negative_pairs);
}

TEST_CASE("unknown subject id throws") {
  const PromptSpec spec = two_object_spec();
  CHECK_THROWS_AS(spec.subject(99), std::invalid_argument);
}

}  // TEST_SUITE
