#include "varshap/coalitions.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "varshap/serialize.hpp"

namespace varshap {

bool CoalitionKey::operator<(const CoalitionKey& other) const {
  if (mode != other.mode) return mode < other.mode;
  if (target_id != other.target_id) return target_id < other.target_id;
  return group_ids < other.group_ids;
}

std::string CoalitionKey::to_string(const FeatureGrouping& grouping) const {
  if (group_ids.empty()) return "(empty)";
  std::string out;
  for (size_t i = 0; i < group_ids.size(); ++i) {
    if (i) out += "+";
    out += grouping.name(group_ids[i]);
  }
  return out;
}

std::string CoalitionKey::file_stem() const {
  std::string out;
  for (size_t i = 0; i < group_ids.size(); ++i) {
    if (i) out += "-";
    out += std::to_string(group_ids[i]);
  }
  if (out.empty()) out = "empty";
  if (target_id == "model_output") out += ".model_output";
  return out;
}

CoalitionKey make_key(std::vector<int> group_ids, ModelMode mode, std::string target_id) {
  std::sort(group_ids.begin(), group_ids.end());
  auto last = std::unique(group_ids.begin(), group_ids.end());
  group_ids.erase(last, group_ids.end());
  return CoalitionKey{std::move(group_ids), mode, std::move(target_id)};
}

CoalitionStore::CoalitionStore(Splits splits, FeatureGrouping grouping, std::string target_id,
                               StoreConfig config)
    : splits_(std::move(splits)),
      grouping_(std::move(grouping)),
      target_id_(std::move(target_id)),
      config_(std::move(config)) {
  config_.params_unrestricted.validate();
  config_.params_gam.validate();
  grouping_.validate(splits_.train.feature_count());
  if (splits_.train.row_count() == 0) throw std::runtime_error("coalition store: empty train split");
  if (splits_.test.row_count() == 0) throw std::runtime_error("coalition store: empty test split");

  train_mean_ = mean_of(splits_.train.target);
  NeumaierSum sum;
  for (double t : splits_.test.target) sum.add((t - train_mean_) * (t - train_mean_));
  sigma2_T_ = sum.total() / static_cast<double>(splits_.test.row_count());

  uint64_t h = dataset_fingerprint(splits_.train);
  h = fnv1a(&h, sizeof(h), dataset_fingerprint(splits_.val));
  uint64_t seed = config_.seed;
  h = fnv1a(&seed, sizeof(seed), h);
  // The grouping defines what each cached group-id set means; hash it so a
  // shared cache directory never serves models across different groupings.
  for (int g = 0; g < grouping_.group_count(); ++g) {
    h = fnv1a_str(grouping_.name(g), h);
    for (int f : grouping_.features(g)) h = fnv1a(&f, sizeof(f), h);
  }
  data_fingerprint_ = h;

  if (!config_.cache_dir.empty()) ensure_directory(config_.cache_dir);
  if (config_.component_source.empty()) {
    config_.component_source = grouping_.all_group_ids();
  }
  std::sort(config_.component_source.begin(), config_.component_source.end());
}

CoalitionKey CoalitionStore::key_for(std::vector<int> group_ids, ModelMode mode) const {
  return make_key(std::move(group_ids), mode, target_id_);
}

CoalitionKey CoalitionStore::full_key(ModelMode mode) const {
  return key_for(grouping_.all_group_ids(), mode);
}

uint64_t CoalitionStore::fingerprint_for(const CoalitionKey& key) const {
  uint64_t h = data_fingerprint_;
  const BoostParams& params =
      key.mode == ModelMode::gam ? config_.params_gam : config_.params_unrestricted;
  uint64_t ph = params.fingerprint();
  h = fnv1a(&ph, sizeof(ph), h);
  int mode = static_cast<int>(key.mode);
  h = fnv1a(&mode, sizeof(mode), h);
  h = fnv1a_str(key.target_id, h);
  h = fnv1a(key.group_ids.data(), key.group_ids.size() * sizeof(int), h);
  if (config_.component_reuse && key.mode == ModelMode::gam && key.group_ids.size() == 1) {
    // Derived handles depend on the source coalition as well.
    h = fnv1a(config_.component_source.data(), config_.component_source.size() * sizeof(int), h);
    h = fnv1a("component-reuse", 15, h);
  }
  return h;
}

std::string CoalitionStore::model_path(const CoalitionKey& key) const {
  return config_.cache_dir + "/" + model_mode_name(key.mode) + "/" + key.file_stem() +
         ".model.json";
}

namespace {
std::string manifest_key(const CoalitionKey& key) {
  return model_mode_name(key.mode) + "/" + key.file_stem();
}
}  // namespace

std::optional<EstimatorHandle> CoalitionStore::load_cached(const CoalitionKey& key) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  std::string manifest_path = config_.cache_dir + "/manifest.json";
  if (!file_exists(manifest_path)) return std::nullopt;
  uint64_t want = fingerprint_for(key);
  try {
    nlohmann::json manifest = nlohmann::json::parse(read_text_file(manifest_path));
    auto it = manifest.find(manifest_key(key));
    if (it == manifest.end()) return std::nullopt;
    if ((*it).at("fingerprint").get<std::string>() != std::to_string(want)) return std::nullopt;
    std::string path = model_path(key);
    if (!file_exists(path)) return std::nullopt;
    EstimatorHandle handle;
    handle.key = key;
    handle.ensemble = std::make_shared<TreeEnsemble>(ensemble_from_json(read_text_file(path)));
    handle.val_mse = (*it).value("val_mse", 0.0);
    handle.train_fingerprint = want;
    handle.derived_from_component = (*it).value("derived", false);
    return handle;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable cache entries are treated as misses
  }
}

void CoalitionStore::persist(const EstimatorHandle& handle) {
  if (config_.cache_dir.empty()) return;
  std::lock_guard<std::mutex> lock(manifest_mutex_);
  write_text_file(model_path(handle.key), ensemble_to_json(*handle.ensemble));
  std::string manifest_path = config_.cache_dir + "/manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (file_exists(manifest_path)) {
    try {
      manifest = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const std::exception&) {
      manifest = nlohmann::json::object();
    }
  }
  manifest[manifest_key(handle.key)] = {
      {"fingerprint", std::to_string(handle.train_fingerprint)},
      {"val_mse", handle.val_mse},
      {"derived", handle.derived_from_component},
  };
  write_text_file(manifest_path, manifest.dump(2));
}

EstimatorHandle CoalitionStore::derive_component_handle(const CoalitionKey& key) {
  // Serve a single-group restricted estimator from the source GAM: keep the
  // group's own trees, absorb every other group's mean train-split component
  // into the base score. Predictions equal
  //   base + F_g(x) + sum_{h != g} mean_train(F_h).
  CoalitionKey source_key = key_for(config_.component_source, ModelMode::gam);
  if (source_key.group_ids == key.group_ids) {
    throw std::runtime_error("component reuse: source coalition equals the requested one");
  }
  EstimatorHandle source = get_or_train(source_key);
  const TreeEnsemble& src = *source.ensemble;

  int global_gid = key.group_ids[0];
  int local_gid = src.group_index(grouping_.name(global_gid));
  if (local_gid < 0) throw std::runtime_error("component reuse: group missing from source GAM");

  TreeEnsemble derived;
  derived.mode = ModelMode::gam;
  derived.learning_rate = src.learning_rate;
  derived.grouping = grouping_.subset({global_gid});
  derived.base_score = src.base_score;
  for (int local = 0; local < src.grouping.group_count(); ++local) {
    if (local == local_gid) continue;
    derived.base_score += mean_of(src.group_component(local, splits_.train));
  }
  for (const auto& tree : src.trees) {
    if (tree.group_tag != local_gid) continue;
    RegressionTree copy = tree;
    copy.group_tag = 0;  // single-group grouping in the derived ensemble
    derived.trees.push_back(std::move(copy));
  }
  derived.final_train_mse = mse(derived.predict(splits_.train), splits_.train.target);
  if (splits_.val.row_count() > 0) {
    derived.final_val_mse = mse(derived.predict(splits_.val), splits_.val.target);
  }

  EstimatorHandle handle;
  handle.key = key;
  handle.ensemble = std::make_shared<TreeEnsemble>(std::move(derived));
  handle.val_mse = handle.ensemble->final_val_mse;
  handle.train_fingerprint = fingerprint_for(key);
  handle.derived_from_component = true;
  return handle;
}

EstimatorHandle CoalitionStore::train_key(const CoalitionKey& key) {
  if (config_.component_reuse && key.mode == ModelMode::gam && key.group_ids.size() == 1 &&
      config_.component_source != key.group_ids) {
    return derive_component_handle(key);
  }

  const BoostParams& params =
      key.mode == ModelMode::gam ? config_.params_gam : config_.params_unrestricted;
  TreeEnsemble ens;
  if (key.mode == ModelMode::gam) {
    FeatureGrouping partial = grouping_.subset(key.group_ids);
    ens = fit(splits_.train, splits_.val, ModelMode::gam, partial, params);
  } else {
    std::vector<int> allowed = grouping_.feature_union(key.group_ids);
    ens = fit(splits_.train, splits_.val, ModelMode::unrestricted, {}, params, allowed);
  }
  // Post-condition: the model never reads a feature outside the coalition.
  ens.check_feature_confinement(grouping_.feature_union(key.group_ids));

  EstimatorHandle handle;
  handle.key = key;
  handle.val_mse = ens.final_val_mse;
  handle.train_fingerprint = fingerprint_for(key);
  handle.ensemble = std::make_shared<TreeEnsemble>(std::move(ens));
  return handle;
}

EstimatorHandle CoalitionStore::get_or_train(const CoalitionKey& key) {
  if (key.empty()) throw std::runtime_error("get_or_train: empty coalition is not a model");
  if (key.target_id != target_id_) {
    throw std::runtime_error("get_or_train: key targets '" + key.target_id +
                             "' but the store serves '" + target_id_ + "'");
  }
  for (int g : key.group_ids) {
    if (g < 0 || g >= grouping_.group_count()) {
      throw std::runtime_error("get_or_train: unknown group id in coalition");
    }
  }

  std::shared_ptr<std::mutex> key_mutex;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = handles_.find(key);
    if (it != handles_.end()) return it->second;
    auto& slot = key_mutexes_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    key_mutex = slot;
  }

  // Single-flight per key: the first caller trains, the rest wait then reuse.
  std::lock_guard<std::mutex> key_lock(*key_mutex);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = handles_.find(key);
    if (it != handles_.end()) return it->second;
  }

  EstimatorHandle handle;
  if (auto cached = load_cached(key)) {
    handle = std::move(*cached);
  } else {
    handle = train_key(key);
    // Derived handles are free re-derivations of the source model. They are
    // neither counted as trainings nor persisted: a cache entry must always
    // mean "separately trained", or a later run without component reuse
    // would silently inherit derived estimators.
    if (!handle.derived_from_component) {
      persist(handle);
      std::lock_guard<std::mutex> lock(mutex_);
      ++trainings_performed_;
    }
  }
  std::lock_guard<std::mutex> lock(mutex_);
  handles_[key] = handle;
  return handle;
}

std::vector<double> CoalitionStore::evaluate(const CoalitionKey& key, const Dataset& rows) {
  if (key.empty()) {
    return std::vector<double>(rows.row_count(), train_mean_);
  }
  EstimatorHandle handle = get_or_train(key);
  return handle.ensemble->predict(rows);
}

const std::vector<double>& CoalitionStore::test_predictions(const CoalitionKey& key) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = test_pred_cache_.find(key);
    if (it != test_pred_cache_.end()) return it->second;
  }
  std::vector<double> preds = evaluate(key, splits_.test);
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = test_pred_cache_.emplace(key, std::move(preds));
  return it->second;
}

double CoalitionStore::conditional_variance(const CoalitionKey& key) {
  const std::vector<double>& preds = test_predictions(key);
  const std::vector<double>& truth = splits_.test.target;
  NeumaierSum sum;
  for (size_t i = 0; i < preds.size(); ++i) {
    double d = truth[i] - preds[i];
    sum.add(d * d);
  }
  return sum.total() / static_cast<double>(preds.size());
}

void CoalitionStore::pretrain(const std::vector<CoalitionKey>& keys) {
  int jobs = std::max(1, config_.jobs);
  if (jobs == 1 || keys.size() <= 1) {
    for (const auto& key : keys) {
      if (!key.empty()) get_or_train(key);
    }
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      if (keys[i].empty()) continue;
      try {
        get_or_train(keys[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

bool CoalitionStore::is_cached(const CoalitionKey& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (handles_.count(key)) return true;
  // Disk-cached entries count too; fingerprint validation happens on load.
  return !config_.cache_dir.empty() && load_cached(key).has_value();
}

std::vector<CoalitionKey> enumerate_required_coalitions(
    const std::vector<std::vector<int>>& orderings, ModelMode mode,
    const std::string& target_id) {
  if (orderings.empty()) throw std::runtime_error("enumerate_required_coalitions: no orderings");
  std::set<std::vector<int>> prefix_sets;
  for (const auto& ordering : orderings) {
    std::vector<int> prefix;
    for (int g : ordering) {
      prefix.push_back(g);
      std::vector<int> sorted = prefix;
      std::sort(sorted.begin(), sorted.end());
      prefix_sets.insert(std::move(sorted));
    }
  }
  std::vector<CoalitionKey> keys;
  keys.reserve(prefix_sets.size());
  for (const auto& ids : prefix_sets) {
    keys.push_back(CoalitionKey{ids, mode, target_id});
  }
  return keys;
}

}  // namespace varshap
