#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varshap/coalitions.hpp"
#include "varshap/dag.hpp"
#include "varshap/metrics.hpp"

namespace varshap {

// Which value function drives the attribution:
//   v_expectation   — v(S) at a row is the conditional-expectation estimate;
//                     phi_0 is the training mean.
//   w_squared_error — w(S) at a row is (t - v(S))^2; phi_0 is (t - mean)^2,
//                     and test-set means of the contributions explain the
//                     variance reduction globally.
enum class ValueFunctionKind { v_expectation, w_squared_error };

struct LocalAttribution {
  int row = 0;
  double phi_0 = 0.0;
  std::vector<double> phi;  // per group

  double efficiency_gap = 0.0;  // |phi_0 + sum(phi) - value(full)| at this row
};

struct VerdictRecord {
  std::string name;
  bool pass = false;
  bool hard = true;  // hard = algebraic identity; soft = tolerance-slack check
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct OrderingMeta {
  bool exact = true;
  uint64_t total_orderings = 0;
  uint64_t used_orderings = 0;
  uint64_t cap = 0;
  uint64_t distinct_prefixes = 0;  // trained coalitions (incl. full, excl. empty)
};

// Per (ordering, position) aggregate used by the position-identity verifier:
// the test-set mean of the w-delta when `group` joins `prefix`.
struct PositionStat {
  std::vector<int> prefix;  // group ids, sorted
  int group = -1;
  double weight = 0.0;      // ordering weight
  double mean_delta = 0.0;  // mean over test rows of w(prefix+group) - w(prefix)
};

struct AttributionReport {
  ModelMode mode = ModelMode::unrestricted;
  std::string target_id;
  double sigma2_T = 0.0;
  double phi_0 = 0.0;  // == sigma2_T
  std::vector<std::string> group_names;
  std::vector<double> contributions;  // mean w-attribution per group (negative = variance reduced)
  double phi_I = 0.0;                 // gam mode only; 0 in unrestricted reports
  double residual_variance = 0.0;     // conditional variance of the unrestricted full model
  OrderingMeta ordering_meta;
  std::vector<PositionStat> position_stats;
  std::vector<VerdictRecord> verdicts;

  double max_efficiency_gap = 0.0;      // over test rows
  double ledger_path_deviation = 0.0;   // per-row path vs ledger-assembled path
};

// Exact subset-enumeration Shapley values at every test row. Requires
// <= 20 groups; trains/fetches all 2^k coalition estimators.
std::vector<LocalAttribution> shap_local_test(CoalitionStore& store, ModelMode mode,
                                              ValueFunctionKind kind,
                                              const std::vector<int>& group_ids);

// Permutation-weighted attribution at every test row for a fixed ordering
// set (Shapley when the set is all permutations with uniform weights).
std::vector<LocalAttribution> asv_local_test(CoalitionStore& store, ModelMode mode,
                                             ValueFunctionKind kind,
                                             const std::vector<std::vector<int>>& orderings,
                                             const std::vector<double>& weights);

// Global distal-weighted report: enumerates admissible orderings of the DAG,
// trains all prefix estimators, averages per-row squared-error attributions
// over the test split, and cross-checks the result against the
// variance-ledger assembly (position identity). gam reports include phi_I
// (which also trains the unrestricted full model for the gap).
AttributionReport asv_global_report(CoalitionStore& store, const CausalDag& dag,
                                    ModelMode mode, uint64_t ordering_cap, uint64_t seed);

// Rebuilds every per-position mean delta from the ledger and compares:
// -mean(phi at position) must equal L(group) + W(group; prefix) to 1e-6.
// Fails naming the first offending coalition.
VerdictRecord verify_position_identity(const AttributionReport& report,
                                       const VarianceLedger& ledger);

// Soft checks about the restricted estimator family on fitted models:
//  - additive_independence: for designated independent group pairs,
//    L^r(A)+L^r(B) == L^r(A,B) within 0.03*sigma2.
//  - covariance_bound: W^r(A;B) <= -2*cov(F_A,F_B) + 0.03*sigma2 for every
//    evaluated pair.
std::vector<VerdictRecord> verify_additive_family(CoalitionStore& store,
                                           const std::vector<std::pair<int, int>>& independent_pairs,
                                           const std::vector<std::pair<int, int>>& evaluated_pairs);

// Projection identity L(X) == variance(prediction): exact form for an
// analytically supplied predictor (both sides about the test mean, 1e-9), and
// fitted form for a trained coalition (0.05*sigma2 tolerance).
VerdictRecord check_projection_identity_exact(const std::vector<double>& predictions,
                                              const std::vector<double>& truth);
VerdictRecord check_projection_identity_fitted(CoalitionStore& store, const CoalitionKey& key);

// Dataset with the target replaced by the full model's predictions
// (target_id "model_output"); the downstream pipeline is unchanged.
Dataset self_explanation_target(const TreeEnsemble& full_model, const Dataset& data);

// Max over rows of the efficiency gap (phi_0 + sum(phi) vs full-coalition value).
double max_efficiency_gap(const std::vector<LocalAttribution>& locals);

}  // namespace varshap
