#include "uncage/prompt.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace uncage {

const SubjectToken& PromptSpec::subject(int id) const {
  for (const auto& s : subjects) {
    if (s.id == id) return s;
  }
  throw std::invalid_argument("unknown subject id " + std::to_string(id));
}

PromptSpec build_prompt_spec(const std::vector<ObjectSpec>& objects) {
  if (objects.empty()) {
    throw std::invalid_argument("prompt needs at least one object");
  }

  PromptSpec spec;
  std::unordered_set<std::string> seen;
  int next_id = 0;

  for (const auto& [label, attr_labels] : objects) {
    if (label.empty()) throw std::invalid_argument("empty object label");
    if (!seen.insert(label).second) {
      throw std::invalid_argument("duplicate label: " + label);
    }
    const int object_id = next_id++;
    spec.subjects.push_back({object_id, SubjectKind::Object, label});
    spec.objects.insert(object_id);

    auto& pos = spec.positive_pairs[object_id];
    pos.insert(object_id);  // positive set always contains the object itself
    for (const auto& attr : attr_labels) {
      if (attr.empty()) throw std::invalid_argument("empty attribute label");
      if (!seen.insert(attr).second) {
        throw std::invalid_argument("duplicate label: " + attr);
      }
      const int attr_id = next_id++;
      spec.subjects.push_back({attr_id, SubjectKind::Attribute, attr});
      spec.attributes.insert(attr_id);
      pos.insert(attr_id);
    }
  }

  // Negative pairs: everything outside the positive set.
  for (int o : spec.objects) {
    const auto& pos = spec.positive_pairs.at(o);
    auto& neg = spec.negative_pairs[o];
    for (const auto& s : spec.subjects) {
      if (!pos.count(s.id)) neg.insert(s.id);
    }
  }
  return spec;
}

std::vector<PromptViolation> validate(const PromptSpec& spec) {
  std::vector<PromptViolation> out;

  std::set<int> subject_ids;
  for (const auto& s : spec.subjects) {
    if (!subject_ids.insert(s.id).second) {
      out.push_back({"duplicate subject id", {s.id}});
    }
  }

  for (int o : spec.objects) {
    if (spec.attributes.count(o)) {
      out.push_back({"subject is both object and attribute", {o}});
    }
  }
  {
    std::set<int> unioned = spec.objects;
    unioned.insert(spec.attributes.begin(), spec.attributes.end());
    if (unioned != subject_ids) {
      std::vector<int> diff;
      std::set_symmetric_difference(unioned.begin(), unioned.end(), subject_ids.begin(),
                                    subject_ids.end(), std::back_inserter(diff));
      out.push_back({"objects and attributes do not cover the subject set", diff});
    }
  }

  for (int o : spec.objects) {
    auto pos_it = spec.positive_pairs.find(o);
    auto neg_it = spec.negative_pairs.find(o);
    if (pos_it == spec.positive_pairs.end() || neg_it == spec.negative_pairs.end()) {
      out.push_back({"missing pair sets for object", {o}});
      continue;
    }
    const auto& pos = pos_it->second;
    const auto& neg = neg_it->second;

    if (!pos.count(o)) {
      out.push_back({"positive set missing self", {o}});
    }

    std::vector<int> shared;
    std::set_intersection(pos.begin(), pos.end(), neg.begin(), neg.end(),
                          std::back_inserter(shared));
    if (!shared.empty()) {
      shared.insert(shared.begin(), o);
      out.push_back({"positive and negative sets overlap", shared});
    }

    std::set<int> unioned = pos;
    unioned.insert(neg.begin(), neg.end());
    if (unioned != subject_ids) {
      out.push_back({"pair sets do not partition the subject set", {o}});
    }
  }
  return out;
}

std::string prompt_to_json(const PromptSpec& spec) {
  nlohmann::json objs = nlohmann::json::array();
  for (int o : spec.objects) {
    nlohmann::json entry;
    entry["label"] = spec.subject(o).label;
    nlohmann::json attrs = nlohmann::json::array();
    for (int s : spec.positive_pairs.at(o)) {
      if (s != o) attrs.push_back(spec.subject(s).label);
    }
    entry["attributes"] = attrs;
    objs.push_back(entry);
  }
  return nlohmann::json{{"objects", objs}}.dump();
}

PromptSpec prompt_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  std::vector<ObjectSpec> objects;
  for (const auto& entry : j.at("objects")) {
    ObjectSpec o;
    o.first = entry.at("label").get<std::string>();
    if (entry.contains("attributes")) {
      for (const auto& a : entry.at("attributes")) {
        o.second.push_back(a.get<std::string>());
      }
    }
    objects.push_back(std::move(o));
  }
  return build_prompt_spec(objects);
}

}  // namespace uncage
