#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "varshap/dataset.hpp"
#include "varshap/grouping.hpp"

namespace varshap {

enum class ModelMode { unrestricted, gam };
ModelMode parse_model_mode(const std::string& name);
std::string model_mode_name(ModelMode mode);

// How gam mode assigns a group to each boosting round:
//   cyclic — round-robin over groups;
//   greedy — fit one candidate tree per group, keep the largest
//            training-loss reduction (ties to the lower group id).
enum class GroupSchedule { cyclic, greedy };
GroupSchedule parse_group_schedule(const std::string& name);
std::string group_schedule_name(GroupSchedule s);

struct BoostParams {
  int num_rounds = 500;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 20;
  int early_stopping_rounds = 50;  // 0 disables early stopping
  GroupSchedule group_schedule = GroupSchedule::greedy;

  static BoostParams defaults(ModelMode mode);  // max_depth 6 unrestricted / 3 gam
  void validate() const;  // num_rounds >= 1, max_depth >= 1, learning_rate in (0,1]
  uint64_t fingerprint() const;
};

// Flat node storage; split_feature < 0 marks a leaf. Rows with
// value < split_threshold go left, the rest go right.
struct TreeNode {
  int split_feature = -1;
  double split_threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return split_feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int group_tag = -1;           // index into the ensemble's grouping; -1 = untagged

  double predict_row(const std::vector<std::vector<double>>& columns, int row) const;
};

// Additive ensemble: prediction = base_score + learning_rate * sum of tree
// outputs. In gam mode every tree is tagged with the single group whose
// features it may split on, so the ensemble is a sum of per-group functions.
struct TreeEnsemble {
  double base_score = 0.0;
  double learning_rate = 0.1;
  ModelMode mode = ModelMode::unrestricted;
  FeatureGrouping grouping;  // gam mode only; group_tags index into this
  std::vector<RegressionTree> trees;

  std::vector<double> train_mse_history;  // per kept round, after truncation
  double final_train_mse = 0.0;
  double final_val_mse = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> predict(const Dataset& rows) const;
  double predict_row(const Dataset& rows, int row) const;

  // learning_rate * sum of the trees tagged with `group_id` (no base_score).
  // base_score + sum over all groups == predict, elementwise.
  std::vector<double> group_component(int group_id, const Dataset& rows) const;
  int group_index(const std::string& name) const { return grouping.group_index(name); }

  // Sorted set of feature indices referenced by any split.
  std::vector<int> used_features() const;

  // Throws unless every tree's splits stay inside its tagged group (gam) or
  // inside `allowed` when non-empty.
  void check_feature_confinement(const std::vector<int>& allowed = {}) const;
};

// Squared-error gradient boosting with exact greedy splits.
//  - unrestricted mode: every tree may use any feature in `allowed_features`
//    (all features when empty); `grouping` is ignored.
//  - gam mode: each round fits one tree restricted to one group of `grouping`
//    per the schedule in `params`.
// Early stopping watches validation MSE and truncates the ensemble back to
// the best round; an empty `val` disables it. Deterministic: exact greedy
// over sorted values, gain ties broken toward (lower feature id, lower
// threshold); gam greedy ties toward the lower group id.
TreeEnsemble fit(const Dataset& train, const Dataset& val, ModelMode mode,
                 const FeatureGrouping& grouping, const BoostParams& params,
                 const std::vector<int>& allowed_features = {});

double mse(const std::vector<double>& predictions, const std::vector<double>& truth);

}  // namespace varshap
