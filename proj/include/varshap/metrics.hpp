#pragma once

#include <map>
#include <string>
#include <vector>

#include "varshap/coalitions.hpp"
#include "varshap/dataset.hpp"

namespace varshap {

// All scalar statistics: conditional variance, variance reduction L,
// interaction of variance reduction W, component covariance, and the
// complex-interaction share phi_I.

// Mean over rows of (t - prediction)^2 — the test-split average of the
// per-row squared-error value function.
double conditional_variance_of(const std::vector<double>& predictions,
                               const std::vector<double>& truth);

// Conditional variances for a set of coalitions, keyed for later lookup.
// entries[empty key] == sigma2_T by construction.
struct VarianceLedger {
  double sigma2_T = 0.0;
  std::map<CoalitionKey, double> entries;

  bool contains(const CoalitionKey& key) const { return entries.count(key) > 0; }
  double conditional_variance(const CoalitionKey& key) const;  // throws when absent
};

VarianceLedger build_ledger(CoalitionStore& store, const std::vector<CoalitionKey>& keys);

// L(S) = sigma2_T - conditional_variance(S); L(empty) = 0.
double variance_reduction_L(const VarianceLedger& ledger, const CoalitionKey& key);

// W(A;B) = L(A u B) - L(A) - L(B). A and B must be disjoint and share
// mode/target. Negative = redundant information; positive = complex
// interaction.
double interaction_W(const VarianceLedger& ledger, const CoalitionKey& a,
                     const CoalitionKey& b);

// Sample covariance (divide by n), over `rows`, of the summed per-group
// components of a gam ensemble split into two sides. Side ids index the
// ensemble's own grouping. Throws on unrestricted ensembles.
double component_covariance(const TreeEnsemble& ensemble,
                            const std::vector<int>& side_a,
                            const std::vector<int>& side_b, const Dataset& rows);

// phi_I = cv(unrestricted full) - cv(gam full)  (<= 0 up to estimator noise):
// the performance gap between the unrestricted model and its additive
// restriction, reported as a negative contribution.
double complex_interaction_phi_I(const VarianceLedger& ledger,
                                 const std::vector<int>& full_group_ids,
                                 const std::string& target_id);

// CSV export: mode, coalition, conditional_variance, L, percent_of_sigma2.
std::string ledger_to_csv(const VarianceLedger& ledger, const FeatureGrouping& grouping);

// Symmetric pairwise interaction values over groups, one mode at a time.
struct InteractionMatrix {
  std::string unit;  // "percent of sigma2(T)" or "raw"
  ModelMode mode = ModelMode::unrestricted;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [i][j], diagonal 0 by convention

  void validate() const;  // symmetry, zero diagonal
};

std::string matrix_to_csv(const InteractionMatrix& m);

}  // namespace varshap
