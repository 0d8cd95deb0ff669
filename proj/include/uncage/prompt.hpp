#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace uncage {

enum class SubjectKind { Object, Attribute };

struct SubjectToken {
  int id = 0;
  SubjectKind kind = SubjectKind::Object;
  std::string label;
};

// A structured compositional prompt: the full subject set, the object and
// attribute id subsets, and per-object positive/negative pair sets. The
// positive set of an object holds the object itself plus its attributes;
// the negative set holds everything else, so the two always partition the
// subject set.
struct PromptSpec {
  std::vector<SubjectToken> subjects;
  std::set<int> objects;
  std::set<int> attributes;
  std::map<int, std::set<int>> positive_pairs;  // object id -> subject ids
  std::map<int, std::set<int>> negative_pairs;  // object id -> subject ids

  const SubjectToken& subject(int id) const;
};

struct PromptViolation {
  std::string message;
  std::vector<int> subject_ids;
};

using ObjectSpec = std::pair<std::string, std::vector<std::string>>;

// Throws std::invalid_argument on duplicate labels or an empty object list.
PromptSpec build_prompt_spec(const std::vector<ObjectSpec>& objects);

// Returns every invariant violation; empty means the prompt is consistent.
std::vector<PromptViolation> validate(const PromptSpec& spec);

std::string prompt_to_json(const PromptSpec& spec);
PromptSpec prompt_from_json(const std::string& json_text);

}  // namespace uncage
