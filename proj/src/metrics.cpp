#include "varshap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace varshap {

double conditional_variance_of(const std::vector<double>& predictions,
                               const std::vector<double>& truth) {
  if (truth.empty()) throw std::runtime_error("conditional variance: empty test set");
  if (predictions.size() != truth.size()) {
    throw std::runtime_error("conditional variance: length mismatch");
  }
  NeumaierSum sum;
  for (size_t i = 0; i < truth.size(); ++i) {
    double d = truth[i] - predictions[i];
    sum.add(d * d);
  }
  return sum.total() / static_cast<double>(truth.size());
}

double VarianceLedger::conditional_variance(const CoalitionKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) {
    throw std::runtime_error("ledger: missing coalition entry");
  }
  return it->second;
}

VarianceLedger build_ledger(CoalitionStore& store, const std::vector<CoalitionKey>& keys) {
  VarianceLedger ledger;
  ledger.sigma2_T = store.sigma2_T();
  // The empty coalition appears once per (mode, target) referenced by keys,
  // plus the store's native pair, so lookups never miss it.
  ledger.entries[CoalitionKey{{}, ModelMode::unrestricted, store.target_id()}] = ledger.sigma2_T;
  ledger.entries[CoalitionKey{{}, ModelMode::gam, store.target_id()}] = ledger.sigma2_T;
  for (const auto& key : keys) {
    if (key.empty()) continue;
    ledger.entries[key] = store.conditional_variance(key);
  }
  return ledger;
}

double variance_reduction_L(const VarianceLedger& ledger, const CoalitionKey& key) {
  if (key.empty()) return 0.0;
  return ledger.sigma2_T - ledger.conditional_variance(key);
}

double interaction_W(const VarianceLedger& ledger, const CoalitionKey& a,
                     const CoalitionKey& b) {
  if (a.mode != b.mode || a.target_id != b.target_id) {
    throw std::runtime_error("interaction_W: mismatched modes or targets");
  }
  std::vector<int> overlap;
  std::set_intersection(a.group_ids.begin(), a.group_ids.end(), b.group_ids.begin(),
                        b.group_ids.end(), std::back_inserter(overlap));
  if (!overlap.empty()) throw std::runtime_error("interaction_W: coalitions overlap");

  std::vector<int> both = a.group_ids;
  both.insert(both.end(), b.group_ids.begin(), b.group_ids.end());
  CoalitionKey ab = make_key(std::move(both), a.mode, a.target_id);
  return variance_reduction_L(ledger, ab) - variance_reduction_L(ledger, a) -
         variance_reduction_L(ledger, b);
}

double component_covariance(const TreeEnsemble& ensemble, const std::vector<int>& side_a,
                            const std::vector<int>& side_b, const Dataset& rows) {
  if (ensemble.mode != ModelMode::gam) {
    throw std::runtime_error("component_covariance: ensemble is not in gam mode");
  }
  std::vector<double> fa(rows.row_count(), 0.0), fb(rows.row_count(), 0.0);
  for (int g : side_a) {
    std::vector<double> comp = ensemble.group_component(g, rows);
    for (int r = 0; r < rows.row_count(); ++r) fa[r] += comp[r];
  }
  for (int g : side_b) {
    std::vector<double> comp = ensemble.group_component(g, rows);
    for (int r = 0; r < rows.row_count(); ++r) fb[r] += comp[r];
  }
  return population_covariance(fa, fb);
}

double complex_interaction_phi_I(const VarianceLedger& ledger,
                                 const std::vector<int>& full_group_ids,
                                 const std::string& target_id) {
  CoalitionKey unrestricted = make_key(full_group_ids, ModelMode::unrestricted, target_id);
  CoalitionKey gam = make_key(full_group_ids, ModelMode::gam, target_id);
  // Negative when the unrestricted model outperforms the additive restriction.
  return ledger.conditional_variance(unrestricted) - ledger.conditional_variance(gam);
}

std::string ledger_to_csv(const VarianceLedger& ledger, const FeatureGrouping& grouping) {
  std::ostringstream out;
  out.precision(12);
  out << "mode,coalition,conditional_variance,L,percent_of_sigma2\n";
  for (const auto& [key, cv] : ledger.entries) {
    double L = ledger.sigma2_T - cv;
    if (key.empty()) L = 0.0;
    double pct = ledger.sigma2_T > 0 ? 100.0 * L / ledger.sigma2_T : 0.0;
    out << model_mode_name(key.mode) << "," << key.to_string(grouping) << "," << cv << "," << L
        << "," << pct << "\n";
  }
  return out.str();
}

void InteractionMatrix::validate() const {
  size_t n = names.size();
  if (values.size() != n) throw std::runtime_error("interaction matrix: ragged rows");
  for (size_t i = 0; i < n; ++i) {
    if (values[i].size() != n) throw std::runtime_error("interaction matrix: ragged columns");
    if (values[i][i] != 0.0) throw std::runtime_error("interaction matrix: nonzero diagonal");
    for (size_t j = 0; j < n; ++j) {
      if (std::abs(values[i][j] - values[j][i]) > 1e-12) {
        throw std::runtime_error("interaction matrix: asymmetry");
      }
    }
  }
}

std::string matrix_to_csv(const InteractionMatrix& m) {
  std::ostringstream out;
  out.precision(12);
  out << "group";
  for (const auto& name : m.names) out << "," << name;
  out << "\n";
  for (size_t i = 0; i < m.names.size(); ++i) {
    out << m.names[i];
    for (size_t j = 0; j < m.names.size(); ++j) out << "," << m.values[i][j];
    out << "\n";
  }
  return out.str();
}

}  // namespace varshap
