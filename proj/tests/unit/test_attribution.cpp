#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "varshap/attribution.hpp"
#include "varshap/coalitions.hpp"
#include "varshap/dag.hpp"
#include "varshap/dataset.hpp"
#include "varshap/grouping.hpp"
#include "varshap/metrics.hpp"
#include "varshap/rng.hpp"
#include "varshap/synthetic.hpp"

using namespace varshap;

namespace {

StoreConfig quick_config(uint64_t seed, int rounds = 12) {
  StoreConfig c;
  c.params_unrestricted = BoostParams::defaults(ModelMode::unrestricted);
  c.params_unrestricted.num_rounds = rounds;
  c.params_unrestricted.max_depth = 3;
  c.params_unrestricted.min_samples_leaf = 10;
  c.params_unrestricted.early_stopping_rounds = 0;
  c.params_gam = BoostParams::defaults(ModelMode::gam);
  c.params_gam.num_rounds = rounds;
  c.params_gam.min_samples_leaf = 10;
  c.params_gam.early_stopping_rounds = 0;
  c.seed = seed;
  return c;
}

Splits synthetic_splits(ExampleId id, int n, uint64_t seed) {
  SyntheticSpec spec;
  spec.example_id = id;
  spec.n = n;
  spec.seed = seed;
  Dataset d = generate_synthetic(spec);
  return split(d, SplitSpec{0.6, 0.2, 0.2, seed});
}

Splits linear_splits(int n, uint64_t seed, int features) {
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

double max_abs_local_diff(const std::vector<LocalAttribution>& a,
                          const std::vector<LocalAttribution>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i].phi_0 - b[i].phi_0));
    for (size_t g = 0; g < a[i].phi.size(); ++g) {
      worst = std::max(worst, std::abs(a[i].phi[g] - b[i].phi[g]));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("one group gets the whole marginal value at every row") {
  Splits s = synthetic_splits(ExampleId::non_additive, 500, 2);
  FeatureGrouping g;
  g.groups = {{"all", {0, 1}}};
  CoalitionStore store(s, g, "T", quick_config(2));

  for (ValueFunctionKind kind : {ValueFunctionKind::v_expectation,
                                 ValueFunctionKind::w_squared_error}) {
    std::vector<LocalAttribution> locals = shap_local_test(store, ModelMode::unrestricted,
                                                           kind, {0});
    REQUIRE(static_cast<int>(locals.size()) == s.test.row_count());
    const std::vector<double>& full =
        store.test_predictions(store.key_for({0}, ModelMode::unrestricted));
    for (size_t i = 0; i < locals.size(); ++i) {
      REQUIRE(locals[i].phi.size() == 1);
      int row = locals[i].row;
      double t = s.test.target[row];
      double v_empty = (kind == ValueFunctionKind::v_expectation)
                           ? store.train_mean()
                           : (t - store.train_mean()) * (t - store.train_mean());
      double v_full = (kind == ValueFunctionKind::v_expectation)
                          ? full[row]
                          : (t - full[row]) * (t - full[row]);
      CHECK(std::abs(locals[i].phi_0 - v_empty) <= 1e-12);
      CHECK(std::abs(locals[i].phi[0] - (v_full - v_empty)) <= 1e-9);
      CHECK(locals[i].efficiency_gap <= 1e-9);
    }
    CHECK(max_efficiency_gap(locals) <= 1e-9);
  }
}

TEST_CASE("identical columns earn identical attributions") {
  Dataset d;
  d.target_name = "t";
  d.feature_names = {"left", "right"};
  const int n = 500;
  CounterRng rng(8);
  d.columns = {std::vector<double>(n), std::vector<double>(n)};
  d.target.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = rng.next_normal();
    d.columns[0][i] = v;
    d.columns[1][i] = v;  // exact duplicate feature
    d.target[i] = 2.0 * v + 0.1 * rng.next_normal();
  }
  Splits s = split(d, SplitSpec{0.6, 0.2, 0.2, 8});
  CoalitionStore store(s, singleton_grouping(d), "t", quick_config(8));
  std::vector<LocalAttribution> locals = shap_local_test(
      store, ModelMode::unrestricted, ValueFunctionKind::w_squared_error, {0, 1});
  for (const LocalAttribution& row : locals) {
    REQUIRE(row.phi.size() == 2);
    CHECK(std::abs(row.phi[0] - row.phi[1]) <= 1e-12);
  }
}

TEST_CASE("a constant column is a null player with exactly zero attribution") {
  Dataset d;
  d.target_name = "t";
  d.feature_names = {"signal", "flat"};
  const int n = 500;
  CounterRng rng(12);
  d.columns = {std::vector<double>(n), std::vector<double>(n, 7.0)};
  d.target.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = rng.next_normal();
    d.columns[0][i] = v;
    d.target[i] = v + 0.1 * rng.next_normal();
  }
  Splits s = split(d, SplitSpec{0.6, 0.2, 0.2, 12});
  CoalitionStore store(s, singleton_grouping(d), "t", quick_config(12));
  std::vector<LocalAttribution> locals = shap_local_test(
      store, ModelMode::unrestricted, ValueFunctionKind::w_squared_error, {0, 1});
  for (const LocalAttribution& row : locals) {
    CHECK(std::abs(row.phi[1]) <= 1e-9);
  }
}

TEST_CASE("permutation weighting with no dag equals subset enumeration") {
  Splits s = linear_splits(600, 3, 3);
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", quick_config(3, 8));

  OrderingSet all = enumerate_orderings(empty_dag(g), 100, 3);
  REQUIRE(all.exact);
  REQUIRE(all.orderings.size() == 6);

  for (ModelMode mode : {ModelMode::unrestricted, ModelMode::gam}) {
    for (ValueFunctionKind kind : {ValueFunctionKind::v_expectation,
                                   ValueFunctionKind::w_squared_error}) {
      std::vector<LocalAttribution> shap = shap_local_test(store, mode, kind, {0, 1, 2});
      std::vector<LocalAttribution> asv =
          asv_local_test(store, mode, kind, all.orderings, all.weights);
      REQUIRE(shap.size() == asv.size());
      CHECK(max_abs_local_diff(shap, asv) <= 1e-9);
    }
  }
}

TEST_CASE("global report on a chain satisfies every hard identity") {
  Splits s = synthetic_splits(ExampleId::nonlinearity, 1500, 5);
  FeatureGrouping g = singleton_grouping(s.train);
  CausalDag dag = parse_dag_text(R"({"nodes": ["X1", "X2"], "edges": [["X1", "X2"]]})");
  CoalitionStore store(s, g, "T", quick_config(5, 25));

  for (ModelMode mode : {ModelMode::unrestricted, ModelMode::gam}) {
    AttributionReport report = asv_global_report(store, dag, mode, 100, 5);
    CHECK(report.mode == mode);
    CHECK(report.sigma2_T == store.sigma2_T());
    CHECK(report.phi_0 == report.sigma2_T);
    REQUIRE(report.group_names.size() == 2);
    REQUIRE(report.contributions.size() == 2);

    // Chain admits exactly one ordering; its two prefixes are the trained set.
    CHECK(report.ordering_meta.exact);
    CHECK(report.ordering_meta.total_orderings == 1);
    CHECK(report.ordering_meta.used_orderings == 1);
    CHECK(report.ordering_meta.distinct_prefixes == 2);
    CHECK(report.position_stats.size() == 2);

    for (const VerdictRecord& v : report.verdicts) {
      if (v.hard) {
        INFO(v.name, ": ", v.detail);
        CHECK(v.pass);
      }
    }
    CHECK(report.max_efficiency_gap <= 1e-9);
    CHECK(report.ledger_path_deviation <= 1e-6);

    // Variance accounting: contributions + interaction share explain the
    // drop from phi_0 to the residual.
    double total = report.phi_0 + report.phi_I;
    for (double c : report.contributions) total += c;
    CHECK(std::abs(total - report.residual_variance) <= 1e-6 * report.sigma2_T);

    // Conditioning on everything reduces variance: contributions negative.
    CHECK(report.contributions[0] < 0.0);
    CHECK(report.contributions[1] < 0.0);
    if (mode == ModelMode::gam) {
      CHECK(report.phi_I <= 1e-9);  // additive restriction cannot win
    } else {
      CHECK(report.phi_I == 0.0);
    }
  }
}

TEST_CASE("a corrupted ledger is caught and the coalition named") {
  Splits s = synthetic_splits(ExampleId::nonlinearity, 900, 6);
  FeatureGrouping g = singleton_grouping(s.train);
  CausalDag dag = parse_dag_text(R"({"nodes": ["X1", "X2"], "edges": [["X1", "X2"]]})");
  CoalitionStore store(s, g, "T", quick_config(6, 15));
  AttributionReport report = asv_global_report(store, dag, ModelMode::unrestricted, 100, 6);

  std::vector<CoalitionKey> keys = enumerate_required_coalitions(
      {{0, 1}}, ModelMode::unrestricted, "T");
  VarianceLedger ledger = build_ledger(store, keys);
  CHECK(verify_position_identity(report, ledger).pass);

  VarianceLedger corrupted = ledger;
  corrupted.entries[store.key_for({0}, ModelMode::unrestricted)] +=
      1e-3 * store.sigma2_T();
  VerdictRecord bad = verify_position_identity(report, corrupted);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_deviation > 1e-6);
  CHECK(bad.detail.find("X1") != std::string::npos);
}

TEST_CASE("restricted-family checks hold where the oracle says they must") {
  // Sign product: both marginals carry nothing an additive model can use, so
  // restricted variance reductions are all ~0 and both checks pass easily.
  Splits s = synthetic_splits(ExampleId::pairwise_independence, 3000, 7);
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "T", quick_config(7, 20));
  std::vector<VerdictRecord> verdicts = verify_additive_family(store, {{0, 1}}, {{0, 1}});
  REQUIRE(verdicts.size() == 2);
  bool saw_additive = false, saw_bound = false;
  for (const VerdictRecord& v : verdicts) {
    INFO(v.name, ": ", v.detail);
    CHECK_FALSE(v.hard);  // statistical statements about fitted models
    CHECK(v.pass);
    if (v.name == "additive_independence") saw_additive = true;
    if (v.name == "covariance_bound") saw_bound = true;
  }
  CHECK(saw_additive);
  CHECK(saw_bound);
}

TEST_CASE("projection identity: exact for a perfect predictor, caught when scaled") {
  SyntheticSpec spec;
  spec.example_id = ExampleId::nonlinearity;
  spec.n = 2000;
  spec.seed = 9;
  Dataset d = generate_synthetic(spec);
  Splits s = split(d, SplitSpec{0.6, 0.2, 0.2, 9});

  // The target is a deterministic function of the features, so the analytic
  // conditional expectation reproduces it exactly.
  std::vector<double> perfect(s.test.row_count());
  for (int i = 0; i < s.test.row_count(); ++i) {
    double z = 2.0 * s.test.columns[0][i] + 2.0 * s.test.columns[1][i];
    perfect[i] = z * z;
  }
  VerdictRecord exact = check_projection_identity_exact(perfect, s.test.target);
  CHECK(exact.name == "projection_identity");
  CHECK(exact.hard);
  CHECK(exact.pass);
  CHECK(exact.max_deviation <= 1e-9);

  // A merely rescaled predictor is not a conditional expectation; the
  // identity must detect it.
  std::vector<double> scaled = perfect;
  for (double& p : scaled) p *= 0.9;
  CHECK_FALSE(check_projection_identity_exact(scaled, s.test.target).pass);
}

TEST_CASE("projection identity holds for a well-fit estimator") {
  Splits s = linear_splits(3000, 10, 2);
  FeatureGrouping g = singleton_grouping(s.train);
  CoalitionStore store(s, g, "t", quick_config(10, 120));
  VerdictRecord fitted = check_projection_identity_fitted(
      store, store.key_for({0, 1}, ModelMode::unrestricted));
  CHECK(fitted.name == "projection_identity_fitted");
  CHECK_FALSE(fitted.hard);
  INFO("deviation ", fitted.max_deviation, " tolerance ", fitted.tolerance);
  CHECK(fitted.pass);
}

TEST_CASE("self-explanation swaps the target for the model output") {
  Splits s = linear_splits(500, 11, 2);
  FeatureGrouping g = singleton_grouping(s.train);
  BoostParams p = quick_config(11).params_unrestricted;
  TreeEnsemble model = fit(s.train, Dataset{}, ModelMode::unrestricted, g, p);

  Dataset swapped = self_explanation_target(model, s.test);
  CHECK(swapped.target_name == "model_output");
  CHECK(swapped.feature_names == s.test.feature_names);
  std::vector<double> pred = model.predict(s.test);
  REQUIRE(swapped.target.size() == pred.size());
  for (size_t i = 0; i < pred.size(); ++i) CHECK(swapped.target[i] == pred[i]);
}
