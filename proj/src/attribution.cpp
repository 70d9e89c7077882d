#include "varshap/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace varshap {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double result = 1.0;
  for (int i = 0; i < k; ++i) result = result * (n - i) / (i + 1);
  return result;
}

std::string ids_to_names(const std::vector<int>& ids, const std::vector<std::string>& names) {
  if (ids.empty()) return "(empty)";
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += "+";
    out += (ids[i] >= 0 && ids[i] < static_cast<int>(names.size())) ? names[ids[i]]
                                                                    : std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

double max_efficiency_gap(const std::vector<LocalAttribution>& locals) {
  double gap = 0.0;
  for (const auto& l : locals) gap = std::max(gap, l.efficiency_gap);
  return gap;
}

std::vector<LocalAttribution> shap_local_test(CoalitionStore& store, ModelMode mode,
                                              ValueFunctionKind kind,
                                              const std::vector<int>& group_ids) {
  const int k = static_cast<int>(group_ids.size());
  if (k == 0) throw std::runtime_error("shap: no groups");
  if (k > 20) throw std::runtime_error("shap: exact subset enumeration is capped at 20 groups");

  const Dataset& test = store.splits().test;
  const int n = test.row_count();
  const double train_mean = store.train_mean();

  // Pretrain all 2^k - 1 nonempty coalitions, then snapshot per-subset values.
  std::vector<CoalitionKey> keys(1ull << k);
  std::vector<CoalitionKey> to_train;
  for (uint64_t mask = 0; mask < (1ull << k); ++mask) {
    std::vector<int> ids;
    for (int j = 0; j < k; ++j) {
      if (mask & (1ull << j)) ids.push_back(group_ids[j]);
    }
    keys[mask] = store.key_for(ids, mode);
    if (mask) to_train.push_back(keys[mask]);
  }
  store.pretrain(to_train);

  std::vector<const std::vector<double>*> preds(1ull << k);
  for (uint64_t mask = 0; mask < (1ull << k); ++mask) {
    preds[mask] = &store.test_predictions(keys[mask]);
  }

  auto value_at = [&](uint64_t mask, int row) -> double {
    double p = (*preds[mask])[row];
    if (kind == ValueFunctionKind::v_expectation) return p;
    double d = test.target[row] - p;
    return d * d;
  };

  // weight(s) = s!(k-1-s)!/k! = 1 / (k * C(k-1, s))
  std::vector<double> weight(k);
  for (int s = 0; s < k; ++s) weight[s] = 1.0 / (k * binomial(k - 1, s));

  const uint64_t full = (1ull << k) - 1;
  std::vector<LocalAttribution> out(n);
  for (int row = 0; row < n; ++row) {
    LocalAttribution& local = out[row];
    local.row = row;
    local.phi_0 = value_at(0, row);
    local.phi.assign(k, 0.0);
    for (uint64_t mask = 0; mask < (1ull << k); ++mask) {
      int s = __builtin_popcountll(mask);
      for (int j = 0; j < k; ++j) {
        uint64_t bit = 1ull << j;
        if (mask & bit) continue;
        local.phi[j] += weight[s] * (value_at(mask | bit, row) - value_at(mask, row));
      }
    }
    double total = local.phi_0;
    for (double p : local.phi) total += p;
    local.efficiency_gap = std::abs(total - value_at(full, row));
  }
  return out;
}

std::vector<LocalAttribution> asv_local_test(CoalitionStore& store, ModelMode mode,
                                             ValueFunctionKind kind,
                                             const std::vector<std::vector<int>>& orderings,
                                             const std::vector<double>& weights) {
  if (orderings.empty()) throw std::runtime_error("asv: no orderings");
  if (orderings.size() != weights.size()) throw std::runtime_error("asv: weight count mismatch");

  const Dataset& test = store.splits().test;
  const int n = test.row_count();
  const int k = static_cast<int>(orderings[0].size());

  std::vector<CoalitionKey> required =
      enumerate_required_coalitions(orderings, mode, store.target_id());
  store.pretrain(required);

  auto preds_of = [&](const std::vector<int>& ids) -> const std::vector<double>& {
    return store.test_predictions(store.key_for(ids, mode));
  };
  auto value_of = [&](const std::vector<double>& preds, int row) -> double {
    if (kind == ValueFunctionKind::v_expectation) return preds[row];
    double d = test.target[row] - preds[row];
    return d * d;
  };

  std::vector<LocalAttribution> out(n);
  const std::vector<double>& empty_preds = preds_of({});
  for (int row = 0; row < n; ++row) {
    out[row].row = row;
    out[row].phi_0 = value_of(empty_preds, row);
    out[row].phi.assign(store.grouping().group_count(), 0.0);
  }

  for (size_t o = 0; o < orderings.size(); ++o) {
    const auto& ordering = orderings[o];
    if (static_cast<int>(ordering.size()) != k) {
      throw std::runtime_error("asv: ragged ordering set");
    }
    double w = weights[o];
    const std::vector<double>* prev = &empty_preds;
    std::vector<int> prefix;
    for (int j = 0; j < k; ++j) {
      prefix.push_back(ordering[j]);
      const std::vector<double>& cur = preds_of(prefix);
      for (int row = 0; row < n; ++row) {
        out[row].phi[ordering[j]] += w * (value_of(cur, row) - value_of(*prev, row));
      }
      prev = &cur;
    }
  }

  const std::vector<double>& full_preds = preds_of(orderings[0]);
  for (int row = 0; row < n; ++row) {
    double total = out[row].phi_0;
    for (double p : out[row].phi) total += p;
    out[row].efficiency_gap = std::abs(total - value_of(full_preds, row));
  }
  return out;
}

AttributionReport asv_global_report(CoalitionStore& store, const CausalDag& dag,
                                    ModelMode mode, uint64_t ordering_cap, uint64_t seed) {
  const FeatureGrouping& grouping = store.grouping();
  OrderingSet ordering_set = enumerate_orderings(dag, ordering_cap, seed);
  std::vector<std::vector<int>> orderings =
      orderings_as_group_ids(dag, ordering_set, grouping);

  std::vector<CoalitionKey> required =
      enumerate_required_coalitions(orderings, mode, store.target_id());
  CoalitionKey full_unrestricted = store.full_key(ModelMode::unrestricted);
  std::vector<CoalitionKey> to_train = required;
  if (mode == ModelMode::gam) to_train.push_back(full_unrestricted);
  store.pretrain(to_train);

  AttributionReport report;
  report.mode = mode;
  report.target_id = store.target_id();
  report.sigma2_T = store.sigma2_T();
  report.phi_0 = report.sigma2_T;
  for (int g = 0; g < grouping.group_count(); ++g) {
    report.group_names.push_back(grouping.name(g));
  }
  report.ordering_meta = OrderingMeta{ordering_set.exact, ordering_set.total_count,
                                      static_cast<uint64_t>(ordering_set.orderings.size()),
                                      ordering_cap, static_cast<uint64_t>(required.size())};

  // Per-row squared-error attribution path.
  std::vector<LocalAttribution> locals = asv_local_test(
      store, mode, ValueFunctionKind::w_squared_error, orderings, ordering_set.weights);
  report.max_efficiency_gap = max_efficiency_gap(locals);

  const int n = static_cast<int>(locals.size());
  report.contributions.assign(grouping.group_count(), 0.0);
  for (int g = 0; g < grouping.group_count(); ++g) {
    NeumaierSum sum;
    for (const auto& local : locals) sum.add(local.phi[g]);
    report.contributions[g] = sum.total() / static_cast<double>(n);
  }

  // Position stats from the per-row path: the test mean of the squared-error
  // delta at every (ordering, position). The position-identity verifier
  // compares these against the ledger, so they must not come from the ledger.
  const Dataset& test = store.splits().test;
  auto w_value = [&](const std::vector<double>& preds, int row) {
    double d = test.target[row] - preds[row];
    return d * d;
  };
  std::map<std::vector<int>, const std::vector<double>*> pred_of_prefix;
  auto preds_of = [&](const std::vector<int>& sorted_ids) -> const std::vector<double>& {
    auto it = pred_of_prefix.find(sorted_ids);
    if (it != pred_of_prefix.end()) return *it->second;
    const std::vector<double>& preds = store.test_predictions(store.key_for(sorted_ids, mode));
    pred_of_prefix[sorted_ids] = &preds;
    return preds;
  };
  for (size_t o = 0; o < orderings.size(); ++o) {
    const auto& ordering = orderings[o];
    double w = ordering_set.weights[o];
    std::vector<int> prefix;
    const std::vector<double>* prev = &preds_of({});
    for (int g : ordering) {
      std::vector<int> sorted_prefix = prefix;
      std::sort(sorted_prefix.begin(), sorted_prefix.end());
      prefix.push_back(g);
      std::vector<int> sorted_with = prefix;
      std::sort(sorted_with.begin(), sorted_with.end());
      const std::vector<double>& cur = preds_of(sorted_with);
      NeumaierSum delta_sum;
      for (int row = 0; row < n; ++row) {
        delta_sum.add(w_value(cur, row) - w_value(*prev, row));
      }
      double mean_delta = delta_sum.total() / static_cast<double>(n);
      report.position_stats.push_back(PositionStat{std::move(sorted_prefix), g, w, mean_delta});
      prev = &cur;
    }
  }

  // Ledger path: the same contributions assembled from conditional variances.
  VarianceLedger ledger = build_ledger(store, to_train);
  std::vector<double> ledger_contributions(grouping.group_count(), 0.0);
  for (size_t o = 0; o < orderings.size(); ++o) {
    const auto& ordering = orderings[o];
    double w = ordering_set.weights[o];
    std::vector<int> prefix;
    double prev_cv = ledger.sigma2_T;
    for (int g : ordering) {
      prefix.push_back(g);
      double cur_cv = ledger.conditional_variance(store.key_for(prefix, mode));
      ledger_contributions[g] += w * (cur_cv - prev_cv);
      prev_cv = cur_cv;
    }
  }
  report.ledger_path_deviation = 0.0;
  for (int g = 0; g < grouping.group_count(); ++g) {
    report.ledger_path_deviation = std::max(
        report.ledger_path_deviation, std::abs(ledger_contributions[g] - report.contributions[g]));
  }

  // Residual accounting: the unrestricted full model anchors both modes.
  if (mode == ModelMode::gam) {
    report.phi_I = complex_interaction_phi_I(ledger, grouping.all_group_ids(), store.target_id());
    report.residual_variance = ledger.conditional_variance(full_unrestricted);
  } else {
    report.phi_I = 0.0;
    report.residual_variance = ledger.conditional_variance(store.full_key(mode));
  }

  // Verdicts: efficiency and accounting are algebraic; position identity is
  // checked against the ledger.
  double scale = std::max(1.0, std::abs(report.residual_variance));
  double accounting = report.phi_0 + report.phi_I;
  for (double c : report.contributions) accounting += c;
  double accounting_dev = std::abs(accounting - report.residual_variance) / scale;

  report.verdicts.push_back(VerdictRecord{"efficiency", report.max_efficiency_gap <= 1e-9, true,
                                          report.max_efficiency_gap, 1e-9,
                                          "max per-row |phi_0 + sum(phi) - w(full)| on test"});
  report.verdicts.push_back(verify_position_identity(report, ledger));
  report.verdicts.push_back(VerdictRecord{
      "variance_accounting", accounting_dev <= 1e-6, true, accounting_dev, 1e-6,
      "relative |phi_0 + sum(phi) + phi_I - residual_variance|"});
  report.verdicts.push_back(VerdictRecord{
      "ledger_path_agreement", report.ledger_path_deviation <= 1e-6, true,
      report.ledger_path_deviation, 1e-6,
      "per-row attribution path vs variance-ledger assembly"});
  return report;
}

VerdictRecord verify_position_identity(const AttributionReport& report,
                                       const VarianceLedger& ledger) {
  VerdictRecord verdict;
  verdict.name = "position_identity";
  verdict.hard = true;
  verdict.tolerance = 1e-6;
  verdict.pass = true;
  verdict.detail = "-mean(phi at position) == L(prefix+group) - L(prefix) for every position";

  for (const auto& stat : report.position_stats) {
    CoalitionKey prefix_key = make_key(stat.prefix, report.mode, report.target_id);
    std::vector<int> with = stat.prefix;
    with.push_back(stat.group);
    CoalitionKey with_key = make_key(with, report.mode, report.target_id);

    double lhs = -stat.mean_delta;
    double rhs = variance_reduction_L(ledger, with_key) - variance_reduction_L(ledger, prefix_key);
    double dev = std::abs(lhs - rhs);
    if (dev > verdict.max_deviation) verdict.max_deviation = dev;
    if (dev > verdict.tolerance && verdict.pass) {
      verdict.pass = false;
      verdict.detail = "deviation " + std::to_string(dev) + " at coalition " +
                       ids_to_names(with, report.group_names) + " (prefix " +
                       ids_to_names(stat.prefix, report.group_names) + ")";
    }
  }
  return verdict;
}

std::vector<VerdictRecord> verify_additive_family(CoalitionStore& store,
                                           const std::vector<std::pair<int, int>>& independent_pairs,
                                           const std::vector<std::pair<int, int>>& evaluated_pairs) {
  std::vector<VerdictRecord> verdicts;
  const double slack = 0.03 * store.sigma2_T();
  const FeatureGrouping& grouping = store.grouping();

  std::vector<CoalitionKey> keys;
  auto add_pair_keys = [&](const std::vector<std::pair<int, int>>& pairs) {
    for (const auto& [a, b] : pairs) {
      keys.push_back(store.key_for({a}, ModelMode::gam));
      keys.push_back(store.key_for({b}, ModelMode::gam));
      keys.push_back(store.key_for({a, b}, ModelMode::gam));
    }
  };
  add_pair_keys(independent_pairs);
  add_pair_keys(evaluated_pairs);
  store.pretrain(keys);
  VarianceLedger ledger = build_ledger(store, keys);

  if (!independent_pairs.empty()) {
    VerdictRecord v;
    v.name = "additive_independence";
    v.hard = false;
    v.tolerance = slack;
    v.pass = true;
    v.detail = "independent groups: L(A) + L(B) == L(A,B) under the additive family";
    for (const auto& [a, b] : independent_pairs) {
      double la = variance_reduction_L(ledger, store.key_for({a}, ModelMode::gam));
      double lb = variance_reduction_L(ledger, store.key_for({b}, ModelMode::gam));
      double lab = variance_reduction_L(ledger, store.key_for({a, b}, ModelMode::gam));
      double dev = std::abs(la + lb - lab);
      if (dev > v.max_deviation) {
        v.max_deviation = dev;
        v.detail = "worst pair " + grouping.name(a) + "/" + grouping.name(b) + ": |L(A)+L(B)-L(A,B)| = " +
                   std::to_string(dev);
      }
    }
    v.pass = v.max_deviation <= v.tolerance;
    verdicts.push_back(v);
  }

  if (!evaluated_pairs.empty()) {
    VerdictRecord v;
    v.name = "covariance_bound";
    v.hard = false;
    v.tolerance = slack;
    v.pass = true;
    v.detail = "W(A;B) <= -2*cov(F_A, F_B) + slack for every evaluated pair";
    for (const auto& [a, b] : evaluated_pairs) {
      CoalitionKey ka = store.key_for({a}, ModelMode::gam);
      CoalitionKey kb = store.key_for({b}, ModelMode::gam);
      double W = interaction_W(ledger, ka, kb);
      EstimatorHandle pair_handle = store.get_or_train(store.key_for({a, b}, ModelMode::gam));
      const TreeEnsemble& pair_model = *pair_handle.ensemble;
      int la = pair_model.group_index(grouping.name(a));
      int lb = pair_model.group_index(grouping.name(b));
      double cov = component_covariance(pair_model, {la}, {lb}, store.splits().test);
      double margin = W - (-2.0 * cov);  // <= 0 when the bound holds exactly
      if (margin > v.max_deviation) {
        v.max_deviation = margin;
        v.detail = "worst pair " + grouping.name(a) + "/" + grouping.name(b) +
                   ": W = " + std::to_string(W) + ", -2cov = " + std::to_string(-2.0 * cov);
      }
    }
    v.pass = v.max_deviation <= v.tolerance;
    verdicts.push_back(v);
  }
  return verdicts;
}

VerdictRecord check_projection_identity_exact(const std::vector<double>& predictions,
                                              const std::vector<double>& truth) {
  // For predictions equal to the true conditional expectation, the variance
  // reduction equals the variance of the predictions. Both sides are computed
  // about test-split means so the identity is sample-exact for a perfect
  // predictor.
  VerdictRecord v;
  v.name = "projection_identity";
  v.hard = true;
  v.tolerance = 1e-9;
  double var_t = population_variance(truth);
  double frac = std::max(1.0, var_t);
  double L = var_t - mse(predictions, truth);
  double var_pred = population_variance(predictions);
  v.max_deviation = std::abs(L - var_pred) / frac;
  v.pass = v.max_deviation <= v.tolerance;
  v.detail = "analytic predictor: |[var(T) - mse] - var(prediction)| (relative)";
  return v;
}

VerdictRecord check_projection_identity_fitted(CoalitionStore& store, const CoalitionKey& key) {
  VerdictRecord v;
  v.name = "projection_identity_fitted";
  v.hard = false;
  v.tolerance = 0.05 * store.sigma2_T();
  const std::vector<double>& preds = store.test_predictions(key);
  double L = store.sigma2_T() - store.conditional_variance(key);
  double var_pred = population_variance(preds);
  v.max_deviation = std::abs(L - var_pred);
  v.pass = v.max_deviation <= v.tolerance;
  v.detail = "fitted estimator: |L - var(prediction)| <= 0.05*sigma2(T)";
  return v;
}

Dataset self_explanation_target(const TreeEnsemble& full_model, const Dataset& data) {
  std::vector<double> preds = full_model.predict(data);
  return data.with_target(std::move(preds), "model_output");
}

}  // namespace varshap
