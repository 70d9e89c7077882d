#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "varshap/dataset.hpp"

namespace varshap {

// Ordered partition of (a subset of) feature indices into named groups —
// the attribution units. Group ids are positions in `groups`.
struct FeatureGrouping {
  std::vector<std::pair<std::string, std::vector<int>>> groups;

  int group_count() const { return static_cast<int>(groups.size()); }
  const std::string& name(int group_id) const { return groups[group_id].first; }
  const std::vector<int>& features(int group_id) const { return groups[group_id].second; }
  int group_index(const std::string& name) const;  // -1 when absent

  // Throws on empty groups, duplicate names, overlapping or out-of-range
  // feature indices.
  void validate(int feature_count) const;

  // Subset of groups (same names and feature indices), preserving order of
  // `group_ids`. Used to build per-coalition GAM partitions.
  FeatureGrouping subset(const std::vector<int>& group_ids) const;

  // Union of the member feature indices of the given groups, sorted.
  std::vector<int> feature_union(const std::vector<int>& group_ids) const;

  std::vector<int> all_group_ids() const;
};

// One singleton group per feature, named after the feature.
FeatureGrouping singleton_grouping(const Dataset& data);

// Deterministic shuffle of feature indices chunked into groups of
// `group_size` (ceiling count: the last group may be smaller). Groups are
// named rg0, rg1, ...
FeatureGrouping random_grouping(const Dataset& data, int group_size, uint64_t seed);

// JSON object mapping group_name -> list of feature names.
FeatureGrouping parse_grouping_json(const std::string& path, const Dataset& data);
FeatureGrouping parse_grouping_json_text(const std::string& text, const Dataset& data);

}  // namespace varshap
