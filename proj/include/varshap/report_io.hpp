#pragma once

#include <string>

#include "varshap/pipeline.hpp"

namespace varshap {

// Report JSON: {mode, phi_0, contributions: {group: {value, percent}}, phi_I,
// residual_variance, ordering_meta, verdicts}. Negative value = variance
// reduced; percent = 100*value/sigma2(T).
std::string report_to_json(const AttributionReport& report);

// Console rendering of a report as a contributions table.
std::string report_to_table(const AttributionReport& report);

std::string verdicts_to_json(const std::vector<VerdictRecord>& verdicts);
std::string remaining_variance_to_csv(const RemainingVarianceResult& result);
std::string remaining_variance_to_table(const RemainingVarianceResult& result);
std::string pair_results_to_csv(const InteractionsResult& result,
                                const FeatureGrouping& grouping);

}  // namespace varshap
