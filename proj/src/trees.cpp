#include "varshap/trees.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace varshap {

ModelMode parse_model_mode(const std::string& name) {
  if (name == "unrestricted") return ModelMode::unrestricted;
  if (name == "gam") return ModelMode::gam;
  throw std::runtime_error("unknown model mode '" + name + "'");
}

std::string model_mode_name(ModelMode mode) {
  return mode == ModelMode::unrestricted ? "unrestricted" : "gam";
}

GroupSchedule parse_group_schedule(const std::string& name) {
  if (name == "cyclic") return GroupSchedule::cyclic;
  if (name == "greedy") return GroupSchedule::greedy;
  throw std::runtime_error("unknown group schedule '" + name + "'");
}

std::string group_schedule_name(GroupSchedule s) {
  return s == GroupSchedule::cyclic ? "cyclic" : "greedy";
}

BoostParams BoostParams::defaults(ModelMode mode) {
  BoostParams p;
  p.max_depth = (mode == ModelMode::gam) ? 3 : 6;
  return p;
}

void BoostParams::validate() const {
  if (num_rounds < 1) throw std::runtime_error("boost params: num_rounds must be >= 1");
  if (max_depth < 1) throw std::runtime_error("boost params: max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::runtime_error("boost params: learning_rate must be in (0,1]");
  }
  if (min_samples_leaf < 1) throw std::runtime_error("boost params: min_samples_leaf must be >= 1");
  if (early_stopping_rounds < 0) {
    throw std::runtime_error("boost params: early_stopping_rounds must be >= 0");
  }
}

uint64_t BoostParams::fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  h = fnv1a(&num_rounds, sizeof(num_rounds), h);
  h = fnv1a(&learning_rate, sizeof(learning_rate), h);
  h = fnv1a(&max_depth, sizeof(max_depth), h);
  h = fnv1a(&min_samples_leaf, sizeof(min_samples_leaf), h);
  h = fnv1a(&early_stopping_rounds, sizeof(early_stopping_rounds), h);
  int sched = static_cast<int>(group_schedule);
  h = fnv1a(&sched, sizeof(sched), h);
  return h;
}

double RegressionTree::predict_row(const std::vector<std::vector<double>>& columns,
                                   int row) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = (columns[n.split_feature][row] < n.split_threshold) ? n.left : n.right;
  }
  return nodes[node].leaf_value;
}

std::vector<double> TreeEnsemble::predict(const Dataset& rows) const {
  std::vector<double> out(rows.row_count(), base_score);
  for (const auto& tree : trees) {
    for (int r = 0; r < rows.row_count(); ++r) {
      out[r] += learning_rate * tree.predict_row(rows.columns, r);
    }
  }
  return out;
}

double TreeEnsemble::predict_row(const Dataset& rows, int row) const {
  double out = base_score;
  for (const auto& tree : trees) out += learning_rate * tree.predict_row(rows.columns, row);
  return out;
}

std::vector<double> TreeEnsemble::group_component(int group_id, const Dataset& rows) const {
  if (mode != ModelMode::gam) {
    throw std::runtime_error("group_component: ensemble is not in gam mode");
  }
  if (group_id < 0 || group_id >= grouping.group_count()) {
    throw std::runtime_error("group_component: unknown group id");
  }
  std::vector<double> out(rows.row_count(), 0.0);
  for (const auto& tree : trees) {
    if (tree.group_tag != group_id) continue;
    for (int r = 0; r < rows.row_count(); ++r) {
      out[r] += learning_rate * tree.predict_row(rows.columns, r);
    }
  }
  return out;
}

std::vector<int> TreeEnsemble::used_features() const {
  std::set<int> used;
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) used.insert(node.split_feature);
    }
  }
  return std::vector<int>(used.begin(), used.end());
}

void TreeEnsemble::check_feature_confinement(const std::vector<int>& allowed) const {
  std::set<int> allowed_set(allowed.begin(), allowed.end());
  for (const auto& tree : trees) {
    std::set<int> tag_set;
    if (mode == ModelMode::gam) {
      if (tree.group_tag < 0 || tree.group_tag >= grouping.group_count()) {
        throw std::runtime_error("confinement: gam tree without a valid group tag");
      }
      const auto& members = grouping.features(tree.group_tag);
      tag_set.insert(members.begin(), members.end());
    }
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      if (mode == ModelMode::gam && !tag_set.count(node.split_feature)) {
        throw std::runtime_error("confinement: split outside the tree's tagged group");
      }
      if (!allowed_set.empty() && !allowed_set.count(node.split_feature)) {
        throw std::runtime_error("confinement: split outside the allowed feature set");
      }
    }
  }
}

double mse(const std::vector<double>& predictions, const std::vector<double>& truth) {
  if (predictions.size() != truth.size()) throw std::runtime_error("mse: length mismatch");
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - truth[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

namespace {

// Exact greedy split search over pre-sorted feature columns. One instance
// per training run; builds one tree per call against the current residuals.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& train, const BoostParams& params)
      : train_(train), params_(params), n_(train.row_count()) {}

  // Sorted row order for a feature, computed lazily and kept for all rounds.
  const std::vector<int>& sorted_rows(int feature) {
    if (sorted_.empty()) sorted_.resize(train_.feature_count());
    auto& order = sorted_[feature];
    if (order.empty() && n_ > 0) {
      order.resize(n_);
      std::iota(order.begin(), order.end(), 0);
      const auto& col = train_.columns[feature];
      std::stable_sort(order.begin(), order.end(),
                       [&col](int a, int b) { return col[a] < col[b]; });
    }
    return order;
  }

  struct BuiltTree {
    RegressionTree tree;
    // Sum over leaves of leaf_sum^2 / leaf_count: proportional to the
    // training SSE reduction once the learning rate is applied. Used by the
    // greedy group schedule.
    double score = 0.0;
    std::vector<int> leaf_of_row;  // node index per training row
  };

  BuiltTree build(const std::vector<double>& residuals, const std::vector<int>& features) {
    BuiltTree out;
    auto& nodes = out.tree.nodes;
    nodes.emplace_back();

    std::vector<int> position(n_, 0);  // node index per row
    std::vector<int> active = {0};     // nodes splittable at the current level

    struct NodeStat {
      long long count = 0;
      double sum = 0.0;
      double sum_sq = 0.0;
    };
    std::vector<NodeStat> stats(1);
    for (int r = 0; r < n_; ++r) {
      stats[0].count++;
      stats[0].sum += residuals[r];
      stats[0].sum_sq += residuals[r] * residuals[r];
    }

    struct Candidate {
      double gain = 0.0;
      int feature = -1;
      double threshold = 0.0;
      bool found = false;
    };

    for (int depth = 0; depth < params_.max_depth && !active.empty(); ++depth) {
      // level-local index per node id, -1 for settled nodes
      std::vector<int> local(nodes.size(), -1);
      for (size_t i = 0; i < active.size(); ++i) local[active[i]] = static_cast<int>(i);

      const size_t k = active.size();
      std::vector<Candidate> best(k);

      // prefix accumulators per active node, reset per feature
      std::vector<long long> left_count(k);
      std::vector<double> left_sum(k);
      std::vector<double> prev_value(k);
      std::vector<char> seen(k);

      for (int f : features) {
        std::fill(left_count.begin(), left_count.end(), 0);
        std::fill(left_sum.begin(), left_sum.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        const auto& order = sorted_rows(f);
        const auto& col = train_.columns[f];

        for (int row : order) {
          int node = position[row];
          int l = node < static_cast<int>(local.size()) ? local[node] : -1;
          if (l < 0) continue;
          double v = col[row];
          if (seen[l] && v > prev_value[l]) {
            // value boundary: candidate split between prev_value and v
            const NodeStat& s = stats[active[l]];
            long long lc = left_count[l];
            long long rc = s.count - lc;
            if (lc >= params_.min_samples_leaf && rc >= params_.min_samples_leaf) {
              double ls = left_sum[l];
              double rs = s.sum - ls;
              double gain = ls * ls / static_cast<double>(lc) +
                            rs * rs / static_cast<double>(rc) -
                            s.sum * s.sum / static_cast<double>(s.count);
              // strict '>' keeps the first candidate on ties: features are
              // scanned in ascending id and thresholds in ascending value
              double eps = 1e-12 * std::max(1.0, s.sum_sq);
              if (gain > eps && gain > best[l].gain) {
                double threshold = prev_value[l] + (v - prev_value[l]) / 2.0;
                if (threshold > prev_value[l] && threshold <= v) {
                  best[l] = Candidate{gain, f, threshold, true};
                }
              }
            }
          }
          seen[l] = 1;
          prev_value[l] = v;
          left_count[l]++;
          left_sum[l] += residuals[row];
        }
      }

      // Materialize the chosen splits; unsplittable nodes become leaves.
      std::vector<int> next_active;
      std::vector<char> splits_exist(k, 0);
      for (size_t i = 0; i < k; ++i) {
        if (!best[i].found) continue;
        splits_exist[i] = 1;
        int node_id = active[i];
        int left_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int right_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[node_id].split_feature = best[i].feature;
        nodes[node_id].split_threshold = best[i].threshold;
        nodes[node_id].left = left_id;
        nodes[node_id].right = right_id;
        next_active.push_back(left_id);
        next_active.push_back(right_id);
      }
      if (next_active.empty()) break;

      stats.resize(nodes.size());
      for (int r = 0; r < n_; ++r) {
        int node = position[r];
        int l = node < static_cast<int>(local.size()) ? local[node] : -1;
        if (l < 0 || !splits_exist[l]) continue;
        const TreeNode& nd = nodes[node];
        int child = (train_.columns[nd.split_feature][r] < nd.split_threshold) ? nd.left
                                                                               : nd.right;
        position[r] = child;
        stats[child].count++;
        stats[child].sum += residuals[r];
        stats[child].sum_sq += residuals[r] * residuals[r];
      }
      active = std::move(next_active);
    }

    // Leaf values: mean residual per leaf node.
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf() && stats[i].count > 0) {
        nodes[i].leaf_value = stats[i].sum / static_cast<double>(stats[i].count);
        out.score += stats[i].sum * stats[i].sum / static_cast<double>(stats[i].count);
      }
    }
    out.leaf_of_row = std::move(position);
    return out;
  }

 private:
  const Dataset& train_;
  const BoostParams& params_;
  int n_;
  std::vector<std::vector<int>> sorted_;
};

}  // namespace

TreeEnsemble fit(const Dataset& train, const Dataset& val, ModelMode mode,
                 const FeatureGrouping& grouping, const BoostParams& params,
                 const std::vector<int>& allowed_features) {
  params.validate();
  if (train.row_count() == 0) throw std::runtime_error("fit: empty training set");
  if (mode == ModelMode::gam && grouping.group_count() == 0) {
    throw std::runtime_error("fit: gam mode requires a grouping");
  }
  for (int f : allowed_features) {
    if (f < 0 || f >= train.feature_count()) {
      throw std::runtime_error("fit: allowed feature index out of range");
    }
  }
  if (mode == ModelMode::gam) grouping.validate(train.feature_count());

  TreeEnsemble ens;
  ens.mode = mode;
  ens.learning_rate = params.learning_rate;
  if (mode == ModelMode::gam) ens.grouping = grouping;
  ens.base_score = mean_of(train.target);

  const int n = train.row_count();
  std::vector<double> residuals(n);
  for (int r = 0; r < n; ++r) residuals[r] = train.target[r] - ens.base_score;

  const bool use_val = val.row_count() > 0 && params.early_stopping_rounds > 0;
  std::vector<double> val_pred(val.row_count(), ens.base_score);

  // Per-round feature sets: one entry in unrestricted mode, one per group in gam.
  std::vector<std::vector<int>> feature_sets;
  if (mode == ModelMode::unrestricted) {
    if (allowed_features.empty()) {
      std::vector<int> all(train.feature_count());
      std::iota(all.begin(), all.end(), 0);
      feature_sets.push_back(std::move(all));
    } else {
      feature_sets.push_back(allowed_features);
    }
  } else {
    for (int g = 0; g < grouping.group_count(); ++g) {
      feature_sets.push_back(grouping.features(g));
    }
  }

  TreeBuilder builder(train, params);
  double best_val = std::numeric_limits<double>::infinity();
  int best_round = -1;

  for (int round = 0; round < params.num_rounds; ++round) {
    TreeBuilder::BuiltTree built;
    int tag = -1;
    if (mode == ModelMode::unrestricted) {
      built = builder.build(residuals, feature_sets[0]);
    } else if (params.group_schedule == GroupSchedule::cyclic) {
      tag = round % grouping.group_count();
      built = builder.build(residuals, feature_sets[tag]);
    } else {
      // greedy: one candidate per group, keep the largest loss reduction
      // (strict '>' ties toward the lower group id)
      double best_score = -1.0;
      for (int g = 0; g < grouping.group_count(); ++g) {
        TreeBuilder::BuiltTree candidate = builder.build(residuals, feature_sets[g]);
        if (candidate.score > best_score) {
          best_score = candidate.score;
          built = std::move(candidate);
          tag = g;
        }
      }
    }
    built.tree.group_tag = tag;

    // Apply the round: residual update via the per-row leaf index.
    double sse = 0.0;
    for (int r = 0; r < n; ++r) {
      residuals[r] -= params.learning_rate * built.tree.nodes[built.leaf_of_row[r]].leaf_value;
      sse += residuals[r] * residuals[r];
    }
    ens.trees.push_back(std::move(built.tree));
    ens.train_mse_history.push_back(sse / static_cast<double>(n));

    if (use_val) {
      const auto& tree = ens.trees.back();
      double val_sse = 0.0;
      for (int r = 0; r < val.row_count(); ++r) {
        val_pred[r] += params.learning_rate * tree.predict_row(val.columns, r);
        double d = val_pred[r] - val.target[r];
        val_sse += d * d;
      }
      double val_mse = val_sse / static_cast<double>(val.row_count());
      if (val_mse < best_val) {
        best_val = val_mse;
        best_round = round;
      } else if (round - best_round >= params.early_stopping_rounds) {
        break;
      }
    }
  }

  if (use_val && best_round >= 0) {
    // Truncate back to the best validation round.
    ens.trees.resize(best_round + 1);
    ens.train_mse_history.resize(best_round + 1);
    ens.final_val_mse = best_val;
  } else if (val.row_count() > 0) {
    ens.final_val_mse = mse(ens.predict(val), val.target);
  }
  ens.final_train_mse = ens.train_mse_history.empty() ? population_variance(train.target)
                                                      : ens.train_mse_history.back();
  return ens;
}

}  // namespace varshap
