#include "varshap/grouping.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "varshap/rng.hpp"
#include "varshap/serialize.hpp"

namespace varshap {

int FeatureGrouping::group_index(const std::string& name) const {
  for (int g = 0; g < group_count(); ++g) {
    if (groups[g].first == name) return g;
  }
  return -1;
}

void FeatureGrouping::validate(int feature_count) const {
  std::set<std::string> names;
  std::set<int> used;
  for (const auto& [name, members] : groups) {
    if (name.empty()) throw std::runtime_error("grouping: empty group name");
    if (!names.insert(name).second) {
      throw std::runtime_error("grouping: duplicate group name '" + name + "'");
    }
    if (members.empty()) throw std::runtime_error("grouping: group '" + name + "' is empty");
    for (int f : members) {
      if (f < 0 || f >= feature_count) {
        throw std::runtime_error("grouping: feature index out of range in group '" + name + "'");
      }
      if (!used.insert(f).second) {
        throw std::runtime_error("grouping: feature index used twice (group '" + name + "')");
      }
    }
  }
}

FeatureGrouping FeatureGrouping::subset(const std::vector<int>& group_ids) const {
  FeatureGrouping out;
  for (int g : group_ids) {
    if (g < 0 || g >= group_count()) throw std::runtime_error("grouping: unknown group id");
    out.groups.push_back(groups[g]);
  }
  return out;
}

std::vector<int> FeatureGrouping::feature_union(const std::vector<int>& group_ids) const {
  std::vector<int> features;
  for (int g : group_ids) {
    if (g < 0 || g >= group_count()) throw std::runtime_error("grouping: unknown group id");
    features.insert(features.end(), groups[g].second.begin(), groups[g].second.end());
  }
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

std::vector<int> FeatureGrouping::all_group_ids() const {
  std::vector<int> ids(group_count());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

FeatureGrouping singleton_grouping(const Dataset& data) {
  FeatureGrouping g;
  for (int f = 0; f < data.feature_count(); ++f) {
    g.groups.push_back({data.feature_names[f], {f}});
  }
  return g;
}

FeatureGrouping random_grouping(const Dataset& data, int group_size, uint64_t seed) {
  if (group_size < 1) throw std::runtime_error("random_grouping: group_size must be >= 1");
  std::vector<int> order(data.feature_count());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed);
  shuffle_indices(order, rng);

  FeatureGrouping g;
  for (size_t start = 0; start < order.size(); start += group_size) {
    size_t end = std::min(order.size(), start + group_size);
    std::vector<int> members(order.begin() + start, order.begin() + end);
    g.groups.push_back({"rg" + std::to_string(g.groups.size()), std::move(members)});
  }
  g.validate(data.feature_count());
  return g;
}

FeatureGrouping parse_grouping_json_text(const std::string& text, const Dataset& data) {
  // ordered_json keeps the file's group order (plain json sorts keys).
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(text);
  if (!doc.is_object()) throw std::runtime_error("grouping: expected a JSON object");
  FeatureGrouping g;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_array()) {
      throw std::runtime_error("grouping: group '" + it.key() + "' must be a list");
    }
    std::vector<int> members;
    for (const auto& name : it.value()) {
      int f = data.feature_index(name.get<std::string>());
      if (f < 0) {
        throw std::runtime_error("grouping: unknown feature '" + name.get<std::string>() +
                                 "' in group '" + it.key() + "'");
      }
      members.push_back(f);
    }
    g.groups.push_back({it.key(), std::move(members)});
  }
  g.validate(data.feature_count());
  return g;
}

FeatureGrouping parse_grouping_json(const std::string& path, const Dataset& data) {
  return parse_grouping_json_text(read_text_file(path), data);
}

}  // namespace varshap
