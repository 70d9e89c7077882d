#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "varshap/coalitions.hpp"
#include "varshap/dataset.hpp"
#include "varshap/grouping.hpp"
#include "varshap/rng.hpp"
#include "varshap/synthetic.hpp"

using namespace varshap;

namespace {

Splits small_splits(int n = 600, uint64_t seed = 4, int features = 2) {
  Dataset d;
  d.target_name = "t";
  CounterRng rng(seed);
  for (int f = 0; f < features; ++f) {
    d.feature_names.push_back("x" + std::to_string(f));
    d.columns.emplace_back(n);
  }
  d.target.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = 0.0;
    for (int f = 0; f < features; ++f) {
      double v = rng.next_normal();
      d.columns[f][i] = v;
      t += (f + 1) * v;
    }
    d.target[i] = t + 0.2 * rng.next_normal();
  }
  return split(d, SplitSpec{0.6, 0.2, 0.2, seed});
}

StoreConfig fast_config(uint64_t seed = 4) {
  StoreConfig c;
  c.params_unrestricted = BoostParams::defaults(ModelMode::unrestricted);
  c.params_unrestricted.num_rounds = 12;
  c.params_unrestricted.max_depth = 3;
  c.params_unrestricted.min_samples_leaf = 10;
  c.params_unrestricted.early_stopping_rounds = 0;
  c.params_gam = BoostParams::defaults(ModelMode::gam);
  c.params_gam.num_rounds = 12;
  c.params_gam.min_samples_leaf = 10;
  c.params_gam.early_stopping_rounds = 0;
  c.seed = seed;
  return c;
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/varshap_store_" + name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("key ordering, canonical ids, and stems") {
  CoalitionKey a = make_key({2, 0}, ModelMode::gam, "t");
  CHECK(a.group_ids == std::vector<int>{0, 2});
  CoalitionKey b = make_key({0, 2}, ModelMode::gam, "t");
  CHECK(a == b);
  CHECK_FALSE(a < b);
  CHECK_FALSE(b < a);
  CoalitionKey c = make_key({0, 2}, ModelMode::unrestricted, "t");
  CHECK(a.file_stem() == b.file_stem());
  CHECK(a.file_stem() != make_key({0, 1}, ModelMode::gam, "t").file_stem());
  // Mode lives in the directory, target in the stem.
  CHECK(make_key({0}, ModelMode::gam, "model_output").file_stem() !=
        make_key({0}, ModelMode::gam, "t").file_stem());
  CHECK((a < c || c < a));

  FeatureGrouping g;
  g.groups = {{"alpha", {0}}, {"beta", {1}}, {"gamma", {2}}};
  CHECK(a.to_string(g) == "alpha+gamma");
  CHECK(make_key({}, ModelMode::gam, "t").to_string(g) == "(empty)");
}

TEST_CASE("empty coalition is served by the training mean") {
  Splits s = small_splits();
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", fast_config());
  CoalitionKey empty = store.key_for({}, ModelMode::unrestricted);
  std::vector<double> pred = store.evaluate(empty, s.test);
  for (double p : pred) CHECK(p == store.train_mean());
  CHECK(store.conditional_variance(empty) == store.sigma2_T());
  CHECK(store.trainings_performed() == 0);

  // sigma2_T matches its definition exactly.
  double manual = 0.0;
  for (int i = 0; i < s.test.row_count(); ++i) {
    double d = s.test.target[i] - store.train_mean();
    manual += d * d;
  }
  manual /= s.test.row_count();
  CHECK(store.sigma2_T() == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("training happens once per key") {
  Splits s = small_splits();
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", fast_config());
  CoalitionKey key = store.key_for({0}, ModelMode::unrestricted);
  CHECK_FALSE(store.is_cached(key));
  EstimatorHandle h1 = store.get_or_train(key);
  CHECK(store.is_cached(key));
  EstimatorHandle h2 = store.get_or_train(key);
  CHECK(store.trainings_performed() == 1);
  CHECK(h1.ensemble.get() == h2.ensemble.get());
  CHECK_FALSE(h1.derived_from_component);

  // Models only see their coalition's features.
  for (int f : h1.ensemble->used_features()) CHECK(f == 0);

  const std::vector<double>& tp1 = store.test_predictions(key);
  const std::vector<double>& tp2 = store.test_predictions(key);
  CHECK(&tp1 == &tp2);
  CHECK(static_cast<int>(tp1.size()) == s.test.row_count());
  double cv = store.conditional_variance(key);
  CHECK(cv > 0.0);
  CHECK(cv < store.sigma2_T());  // x0 carries real signal
}

TEST_CASE("concurrent requests for one key train exactly once") {
  Splits s = small_splits(900, 6);
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", fast_config(6));
  CoalitionKey key = store.key_for({0, 1}, ModelMode::unrestricted);
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&] {
      EstimatorHandle h = store.get_or_train(key);
      if (!h.ensemble) failures.fetch_add(1);
    });
  }
  for (std::thread& t : workers) t.join();
  CHECK(failures.load() == 0);
  CHECK(store.trainings_performed() == 1);
}

TEST_CASE("pretrain covers all keys in parallel") {
  Splits s = small_splits(900, 7);
  FeatureGrouping g = singleton_grouping(s.train);
  StoreConfig cfg = fast_config(7);
  cfg.jobs = 4;
  CoalitionStore store(s, g, "t", cfg);
  std::vector<CoalitionKey> keys = {
      store.key_for({0}, ModelMode::unrestricted),
      store.key_for({1}, ModelMode::unrestricted),
      store.key_for({0, 1}, ModelMode::unrestricted),
      store.key_for({0, 1}, ModelMode::gam),
  };
  store.pretrain(keys);
  CHECK(store.trainings_performed() == 4);
  for (const CoalitionKey& k : keys) CHECK(store.is_cached(k));
  store.pretrain(keys);
  CHECK(store.trainings_performed() == 4);
}

TEST_CASE("disk cache serves a fresh store without retraining") {
  TempDir dir("roundtrip");
  Splits s = small_splits(700, 9);
  FeatureGrouping g = singleton_grouping(s.train);
  StoreConfig cfg = fast_config(9);
  cfg.cache_dir = dir.path;

  std::vector<double> first_preds;
  {
    CoalitionStore store(s, g, "t", cfg);
    CoalitionKey key = store.key_for({0, 1}, ModelMode::gam);
    store.get_or_train(key);
    CHECK(store.trainings_performed() == 1);
    first_preds = store.test_predictions(key);
  }
  {
    CoalitionStore store(s, g, "t", cfg);
    CoalitionKey key = store.key_for({0, 1}, ModelMode::gam);
    EstimatorHandle h = store.get_or_train(key);
    CHECK(store.trainings_performed() == 0);  // loaded, not retrained
    const std::vector<double>& preds = store.test_predictions(key);
    REQUIRE(preds.size() == first_preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
      CHECK(preds[i] == first_preds[i]);  // serialized round-trip is bit-exact
    }
    CHECK_FALSE(h.derived_from_component);
  }
}

TEST_CASE("stale cache entries are ignored when inputs change") {
  TempDir dir("stale");
  Splits s = small_splits(700, 10);
  FeatureGrouping g = singleton_grouping(s.train);
  StoreConfig cfg = fast_config(10);
  cfg.cache_dir = dir.path;
  {
    CoalitionStore store(s, g, "t", cfg);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 1);
  }
  // Unchanged everything: served from disk.
  {
    CoalitionStore store(s, g, "t", cfg);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 0);
  }
  // Same cache directory, different training seed: must retrain.
  StoreConfig other_seed = cfg;
  other_seed.seed = 11;
  {
    CoalitionStore store(s, g, "t", other_seed);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 1);
  }
  // Different boosting parameters: must retrain.
  StoreConfig other_params = cfg;
  other_params.params_unrestricted.num_rounds += 5;
  {
    CoalitionStore store(s, g, "t", other_params);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 1);
  }
  // Same group ids, different grouping meaning: must retrain.
  FeatureGrouping renamed = g;
  renamed.groups[0].first = "renamed";
  {
    CoalitionStore store(s, renamed, "t", cfg);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 1);
  }
  // Each variant overwrote the shared manifest slot, so the original
  // configuration no longer matches and retrains too.
  {
    CoalitionStore store(s, g, "t", cfg);
    store.get_or_train(store.key_for({0}, ModelMode::unrestricted));
    CHECK(store.trainings_performed() == 1);
  }
}

TEST_CASE("fingerprints separate keys, data, and settings") {
  Splits s = small_splits(700, 12);
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", fast_config(12));
  uint64_t f0 = store.fingerprint_for(store.key_for({0}, ModelMode::unrestricted));
  uint64_t f1 = store.fingerprint_for(store.key_for({1}, ModelMode::unrestricted));
  uint64_t fg = store.fingerprint_for(store.key_for({0}, ModelMode::gam));
  CHECK(f0 != f1);
  CHECK(f0 != fg);

  Splits s2 = small_splits(700, 13);
  CoalitionStore store2(s2, g, "t", fast_config(12));
  CHECK(store2.fingerprint_for(store2.key_for({0}, ModelMode::unrestricted)) != f0);
}

TEST_CASE("component reuse derives singles from the source model") {
  Splits s = small_splits(900, 14, 3);
  FeatureGrouping g = singleton_grouping(s.train);
  StoreConfig cfg = fast_config(14);
  cfg.component_reuse = true;
  CoalitionStore store(s, g, "t", cfg);

  CoalitionKey single = store.key_for({1}, ModelMode::gam);
  EstimatorHandle h = store.get_or_train(single);
  CHECK(h.derived_from_component);
  // Only the source (full gam) model was actually trained.
  CHECK(store.trainings_performed() == 1);
  CHECK(store.is_cached(store.full_key(ModelMode::gam)));

  // Derived prediction == source base + own component + training means of the
  // dropped components.
  EstimatorHandle src = store.get_or_train(store.full_key(ModelMode::gam));
  std::vector<double> own = src.ensemble->group_component(1, s.test);
  double offset = src.ensemble->base_score;
  for (int other : {0, 2}) {
    std::vector<double> comp = src.ensemble->group_component(other, s.train);
    offset += mean_of(comp);
  }
  std::vector<double> derived = store.evaluate(single, s.test);
  for (int i = 0; i < s.test.row_count(); ++i) {
    CHECK(std::abs(derived[i] - (offset + own[i])) <= 1e-9);
  }

  // Multi-group and unrestricted keys are still trained normally.
  EstimatorHandle pair = store.get_or_train(store.key_for({0, 1}, ModelMode::gam));
  CHECK_FALSE(pair.derived_from_component);
  EstimatorHandle un = store.get_or_train(store.key_for({1}, ModelMode::unrestricted));
  CHECK_FALSE(un.derived_from_component);
}

TEST_CASE("required coalitions deduplicate ordering prefixes") {
  std::vector<std::vector<int>> chain = {{0, 1, 2}};
  std::vector<CoalitionKey> keys =
      enumerate_required_coalitions(chain, ModelMode::unrestricted, "t");
  REQUIRE(keys.size() == 3);
  CHECK(keys[0].group_ids == std::vector<int>{0});
  CHECK(keys[1].group_ids == std::vector<int>{0, 1});
  CHECK(keys[2].group_ids == std::vector<int>{0, 1, 2});

  // All six orderings of three groups need every nonempty subset: 7 keys.
  std::vector<std::vector<int>> all = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  keys = enumerate_required_coalitions(all, ModelMode::gam, "t");
  CHECK(keys.size() == 7);
  std::set<std::vector<int>> distinct;
  for (const CoalitionKey& k : keys) {
    CHECK(k.mode == ModelMode::gam);
    CHECK(k.target_id == "t");
    distinct.insert(k.group_ids);
  }
  CHECK(distinct.size() == 7);
}
