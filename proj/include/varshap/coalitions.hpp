#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "varshap/dataset.hpp"
#include "varshap/grouping.hpp"
#include "varshap/trees.hpp"

namespace varshap {

// Identity of one conditional-expectation estimator: which groups are
// revealed, which model family estimates it, and which target it predicts
// (the dataset target, or "model_output" in self-explanation runs).
struct CoalitionKey {
  std::vector<int> group_ids;  // sorted, duplicate-free; empty = no features
  ModelMode mode = ModelMode::unrestricted;
  std::string target_id;

  bool operator==(const CoalitionKey&) const = default;
  bool operator<(const CoalitionKey& other) const;
  bool empty() const { return group_ids.empty(); }

  std::string to_string(const FeatureGrouping& grouping) const;  // names joined by '+'
  std::string file_stem() const;  // "<sorted-group-ids>[.target]" for cache paths
};

CoalitionKey make_key(std::vector<int> group_ids, ModelMode mode, std::string target_id);

struct EstimatorHandle {
  CoalitionKey key;
  std::shared_ptr<const TreeEnsemble> ensemble;
  double val_mse = 0.0;
  uint64_t train_fingerprint = 0;
  bool derived_from_component = false;  // served via component reuse, not trained
};

struct StoreConfig {
  BoostParams params_unrestricted = BoostParams::defaults(ModelMode::unrestricted);
  BoostParams params_gam = BoostParams::defaults(ModelMode::gam);
  uint64_t seed = 0;
  std::string cache_dir;  // empty: in-memory only
  // Serve single-group gam coalitions from the named source coalition's GAM
  // components instead of separately trained models.
  bool component_reuse = false;
  std::vector<int> component_source;  // defaults to all groups when empty
  int jobs = 1;
};

// Trains, caches, and serves one estimator per coalition. get_or_train for
// the same key is single-flight: concurrent callers block on a per-key mutex
// and exactly one training run happens. Disk cache layout:
//   <cache_dir>/<mode>/<sorted-group-ids>[.target].model.json
// plus <cache_dir>/manifest.json recording fingerprints.
class CoalitionStore {
 public:
  CoalitionStore(Splits splits, FeatureGrouping grouping, std::string target_id,
                 StoreConfig config);

  EstimatorHandle get_or_train(const CoalitionKey& key);

  // Predictions on arbitrary rows; the empty coalition yields the training
  // mean of the target everywhere.
  std::vector<double> evaluate(const CoalitionKey& key, const Dataset& rows);

  // Cached predictions on the test split (computed once per key).
  const std::vector<double>& test_predictions(const CoalitionKey& key);

  // Mean over test rows of (t - prediction)^2 for this coalition.
  double conditional_variance(const CoalitionKey& key);

  double train_mean() const { return train_mean_; }
  // Empty-coalition conditional variance: mean over test of (t - train_mean)^2.
  double sigma2_T() const { return sigma2_T_; }

  // Train every key up front, config.jobs at a time.
  void pretrain(const std::vector<CoalitionKey>& keys);

  bool is_cached(const CoalitionKey& key) const;
  int trainings_performed() const { return trainings_performed_; }

  const Splits& splits() const { return splits_; }
  const FeatureGrouping& grouping() const { return grouping_; }
  const std::string& target_id() const { return target_id_; }
  const StoreConfig& config() const { return config_; }

  CoalitionKey key_for(std::vector<int> group_ids, ModelMode mode) const;
  CoalitionKey full_key(ModelMode mode) const;

  uint64_t fingerprint_for(const CoalitionKey& key) const;

 private:
  EstimatorHandle train_key(const CoalitionKey& key);
  EstimatorHandle derive_component_handle(const CoalitionKey& key);
  std::string model_path(const CoalitionKey& key) const;
  void persist(const EstimatorHandle& handle);
  std::optional<EstimatorHandle> load_cached(const CoalitionKey& key) const;

  Splits splits_;
  FeatureGrouping grouping_;
  std::string target_id_;
  StoreConfig config_;
  double train_mean_ = 0.0;
  double sigma2_T_ = 0.0;
  uint64_t data_fingerprint_ = 0;

  mutable std::mutex mutex_;  // guards the maps below
  std::map<CoalitionKey, EstimatorHandle> handles_;
  std::map<CoalitionKey, std::vector<double>> test_pred_cache_;
  std::map<CoalitionKey, std::shared_ptr<std::mutex>> key_mutexes_;
  std::mutex manifest_mutex_;
  int trainings_performed_ = 0;
};

// The distinct coalition keys an ordering set requires: every proper prefix
// of every ordering plus the full set, deduplicated. The empty prefix is not
// included (it is served by the training mean, never trained).
std::vector<CoalitionKey> enumerate_required_coalitions(
    const std::vector<std::vector<int>>& orderings, ModelMode mode,
    const std::string& target_id);

}  // namespace varshap
