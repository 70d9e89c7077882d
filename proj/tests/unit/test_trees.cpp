#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "varshap/dataset.hpp"
#include "varshap/grouping.hpp"
#include "varshap/rng.hpp"
#include "varshap/serialize.hpp"
#include "varshap/trees.hpp"

using namespace varshap;

namespace {

Dataset line_data(int n) {
  // y = 3x on a grid: a 1-d regression oracle.
  Dataset d;
  d.target_name = "y";
  d.feature_names = {"x"};
  d.columns = {std::vector<double>(n)};
  d.target.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    d.columns[0][i] = x;
    d.target[i] = 3.0 * x;
  }
  return d;
}

Dataset two_feature_data(int n, uint64_t seed, bool second_matters) {
  Dataset d;
  d.target_name = "t";
  d.feature_names = {"x0", "x1"};
  d.columns = {std::vector<double>(n), std::vector<double>(n)};
  d.target.resize(n);
  CounterRng rng(seed);
  for (int i = 0; i < n; ++i) {
    double a = rng.next_normal();
    double b = rng.next_normal();
    d.columns[0][i] = a;
    d.columns[1][i] = b;
    d.target[i] = a + (second_matters ? 2.0 * b : 0.0) + 0.1 * rng.next_normal();
  }
  return d;
}

BoostParams small_params(ModelMode mode) {
  BoostParams p = BoostParams::defaults(mode);
  p.num_rounds = 40;
  p.learning_rate = 0.3;
  p.max_depth = 3;
  p.min_samples_leaf = 5;
  p.early_stopping_rounds = 0;
  return p;
}

}  // namespace

TEST_CASE("hand-built tree routes rows by threshold") {
  RegressionTree tree;
  tree.nodes.resize(3);
  tree.nodes[0].split_feature = 0;
  tree.nodes[0].split_threshold = 0.5;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1].leaf_value = -1.0;
  tree.nodes[2].leaf_value = 2.0;

  std::vector<std::vector<double>> cols = {{0.2, 0.5, 0.9}};
  CHECK(tree.predict_row(cols, 0) == -1.0);  // below goes left
  CHECK(tree.predict_row(cols, 1) == 2.0);   // boundary goes right
  CHECK(tree.predict_row(cols, 2) == 2.0);
}

TEST_CASE("boosting recovers a linear oracle") {
  Dataset train = line_data(500);
  BoostParams p = small_params(ModelMode::unrestricted);
  p.num_rounds = 200;
  p.max_depth = 2;
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::unrestricted, FeatureGrouping{}, p);
  std::vector<double> pred = model.predict(train);
  double worst = 0.0;
  for (int i = 0; i < train.row_count(); ++i) {
    worst = std::max(worst, std::abs(pred[i] - train.target[i]));
  }
  CHECK(worst < 0.1);
  CHECK(mse(pred, train.target) < 1e-3);
}

TEST_CASE("training loss never increases round over round") {
  Dataset train = two_feature_data(400, 21, true);
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::unrestricted, FeatureGrouping{},
                           small_params(ModelMode::unrestricted));
  REQUIRE(!model.train_mse_history.empty());
  for (size_t i = 1; i < model.train_mse_history.size(); ++i) {
    CHECK(model.train_mse_history[i] <= model.train_mse_history[i - 1] + 1e-12);
  }
  CHECK(model.final_train_mse ==
        doctest::Approx(model.train_mse_history.back()).epsilon(1e-12));
}

TEST_CASE("fitting is deterministic") {
  Dataset train = two_feature_data(300, 33, true);
  FeatureGrouping g = singleton_grouping(train);
  BoostParams p = small_params(ModelMode::gam);
  TreeEnsemble a = fit(train, Dataset{}, ModelMode::gam, g, p);
  TreeEnsemble b = fit(train, Dataset{}, ModelMode::gam, g, p);
  CHECK(ensemble_to_json(a) == ensemble_to_json(b));
}

TEST_CASE("restricted mode tags every tree and confines its splits") {
  Dataset train = two_feature_data(400, 5, true);
  FeatureGrouping g = singleton_grouping(train);
  for (GroupSchedule schedule : {GroupSchedule::cyclic, GroupSchedule::greedy}) {
    BoostParams p = small_params(ModelMode::gam);
    p.group_schedule = schedule;
    TreeEnsemble model = fit(train, Dataset{}, ModelMode::gam, g, p);
    REQUIRE(!model.trees.empty());
    for (const RegressionTree& t : model.trees) {
      CHECK(t.group_tag >= 0);
      CHECK(t.group_tag < g.group_count());
    }
    CHECK_NOTHROW(model.check_feature_confinement());
  }
}

TEST_CASE("restricted prediction decomposes into per-group components") {
  Dataset train = two_feature_data(500, 8, true);
  FeatureGrouping g = singleton_grouping(train);
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::gam, g, small_params(ModelMode::gam));
  Dataset probe = two_feature_data(100, 9, true);
  std::vector<double> pred = model.predict(probe);
  std::vector<double> c0 = model.group_component(0, probe);
  std::vector<double> c1 = model.group_component(1, probe);
  for (int i = 0; i < probe.row_count(); ++i) {
    CHECK(std::abs(pred[i] - (model.base_score + c0[i] + c1[i])) <= 1e-9);
  }
}

TEST_CASE("greedy schedule spends rounds on the informative group") {
  // Only x1 carries signal: greedy must pick group 1 first and mostly stay.
  Dataset train = two_feature_data(600, 13, true);
  for (int i = 0; i < train.row_count(); ++i) {
    train.target[i] = 2.0 * train.columns[1][i];  // x0 is pure noise input
  }
  FeatureGrouping g = singleton_grouping(train);
  BoostParams p = small_params(ModelMode::gam);
  p.group_schedule = GroupSchedule::greedy;
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::gam, g, p);
  REQUIRE(!model.trees.empty());
  CHECK(model.trees[0].group_tag == 1);
  int on_signal = 0;
  for (const RegressionTree& t : model.trees) {
    if (t.group_tag == 1) ++on_signal;
  }
  CHECK(on_signal > static_cast<int>(model.trees.size()) / 2);
}

TEST_CASE("feature allow-list restricts splits") {
  Dataset train = two_feature_data(500, 17, true);
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::unrestricted, FeatureGrouping{},
                           small_params(ModelMode::unrestricted), {0});
  std::vector<int> used = model.used_features();
  for (int f : used) CHECK(f == 0);
  CHECK_NOTHROW(model.check_feature_confinement({0}));
  CHECK_THROWS(model.check_feature_confinement({1}));
}

TEST_CASE("confinement check catches out-of-group splits") {
  FeatureGrouping g;
  g.groups = {{"a", {0}}, {"b", {1}}};
  TreeEnsemble bad;
  bad.mode = ModelMode::gam;
  bad.grouping = g;
  RegressionTree t;
  t.group_tag = 0;
  t.nodes.resize(3);
  t.nodes[0].split_feature = 1;  // splits b's feature while tagged a
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  bad.trees.push_back(t);
  CHECK_THROWS(bad.check_feature_confinement());
}

TEST_CASE("early stopping truncates to the best validation round") {
  // Pure-noise target: validation loss cannot improve for long.
  Dataset train = two_feature_data(300, 19, true);
  Dataset val = two_feature_data(300, 20, true);
  CounterRng rng(77);
  for (int i = 0; i < train.row_count(); ++i) train.target[i] = rng.next_normal();
  for (int i = 0; i < val.row_count(); ++i) val.target[i] = rng.next_normal();
  BoostParams p = small_params(ModelMode::unrestricted);
  p.num_rounds = 300;
  p.early_stopping_rounds = 10;
  TreeEnsemble model = fit(train, val, ModelMode::unrestricted, FeatureGrouping{}, p);
  CHECK(model.trees.size() < 300);
  CHECK(std::isfinite(model.final_val_mse));
  CHECK(model.train_mse_history.size() == model.trees.size());
}

TEST_CASE("serialization round-trips bit-exactly") {
  Dataset train = two_feature_data(400, 23, true);
  FeatureGrouping g = singleton_grouping(train);
  TreeEnsemble model = fit(train, Dataset{}, ModelMode::gam, g, small_params(ModelMode::gam));
  std::string json = ensemble_to_json(model);
  TreeEnsemble back = ensemble_from_json(json);
  CHECK(ensemble_to_json(back) == json);
  Dataset probe = two_feature_data(60, 24, true);
  std::vector<double> a = model.predict(probe);
  std::vector<double> b = back.predict(probe);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);  // bit-exact, not approximate
  }
  CHECK(back.base_score == model.base_score);
  CHECK(back.learning_rate == model.learning_rate);
  CHECK(back.mode == model.mode);
  CHECK(back.grouping.groups == model.grouping.groups);
}

TEST_CASE("parameter validation and name parsing") {
  BoostParams p = BoostParams::defaults(ModelMode::unrestricted);
  CHECK(p.max_depth == 6);
  CHECK(BoostParams::defaults(ModelMode::gam).max_depth == 3);
  CHECK_NOTHROW(p.validate());
  BoostParams bad = p;
  bad.num_rounds = 0;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.learning_rate = 0.0;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.learning_rate = 1.5;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.max_depth = 0;
  CHECK_THROWS(bad.validate());

  CHECK(parse_model_mode("unrestricted") == ModelMode::unrestricted);
  CHECK(parse_model_mode("gam") == ModelMode::gam);
  CHECK_THROWS(parse_model_mode("other"));
  CHECK(model_mode_name(ModelMode::gam) == "gam");
  CHECK(parse_group_schedule("cyclic") == GroupSchedule::cyclic);
  CHECK(parse_group_schedule("greedy") == GroupSchedule::greedy);
  CHECK_THROWS(parse_group_schedule("other"));

  // Distinct parameters produce distinct fingerprints.
  BoostParams q = p;
  q.num_rounds += 1;
  CHECK(p.fingerprint() != q.fingerprint());
}

TEST_CASE("mse helper") {
  CHECK(mse({1.0, 2.0}, {1.0, 4.0}) == doctest::Approx(2.0));
  CHECK(mse({3.0}, {3.0}) == doctest::Approx(0.0));
}
