#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varshap/attribution.hpp"
#include "varshap/coalitions.hpp"
#include "varshap/dag.hpp"
#include "varshap/metrics.hpp"
#include "varshap/synthetic.hpp"

namespace varshap {

// Exit-code contract shared by the CLI and the bindings:
// 0 success, 1 verification failure, 2 config error, 3 budget/limit error.
enum ExitCode : int {
  exit_success = 0,
  exit_verification_failure = 1,
  exit_config_error = 2,
  exit_budget_error = 3,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // Data source: exactly one of csv_path / synthetic.
  std::string csv_path;
  std::string target_name;
  std::vector<std::string> feature_names;  // optional column filter
  std::optional<SyntheticSpec> synthetic;

  // Grouping source: grouping_path, random_group_size, or default singletons.
  std::string grouping_path;
  int random_group_size = 0;

  std::string dag_path;  // empty: DAG with no edges over the grouping

  std::string modes = "both";  // unrestricted | gam | both

  BoostParams params_unrestricted = BoostParams::defaults(ModelMode::unrestricted);
  BoostParams params_gam = BoostParams::defaults(ModelMode::gam);

  uint64_t seed = 1;
  double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;

  std::string out_dir;
  std::string cache_dir;  // default: <out_dir>/cache, overridable via VARSHAP_CACHE
  uint64_t ordering_cap = 2000;
  bool component_reuse = false;
  bool self_explain = false;
  int jobs = 1;
  double epsilon_model = 0.02;  // fraction of sigma2(T)
  int max_trainings = 2000;     // interaction-scan budget

  std::vector<ModelMode> mode_list() const;
  void validate() const;  // throws ConfigError
};

// Builds a RunConfig from the documented JSON schema (the CLI's --config file
// and the language bindings share it). Unknown keys are ignored.
RunConfig parse_run_config_json(const std::string& json_text);

// Resolved inputs shared by the commands.
struct PreparedRun {
  Splits splits;
  FeatureGrouping grouping;
  CausalDag dag;
  std::string target_id;
  int dropped_rows = 0;
};

PreparedRun prepare_run(const RunConfig& config);
std::shared_ptr<CoalitionStore> make_store(const RunConfig& config, const PreparedRun& run);

// ----------------------------------------------------------------- attribute
struct AttributeResult {
  std::vector<AttributionReport> reports;  // one per mode
  VarianceLedger ledger;                   // union over modes
  std::string out_dir;
};
AttributeResult run_attribute(const RunConfig& config);

// -------------------------------------------------------------- interactions
struct PairResult {
  int group_a = 0, group_b = 0;
  ModelMode mode = ModelMode::unrestricted;
  double L_a = 0, L_b = 0, L_ab = 0, W = 0;
  double component_cov = 0;  // gam mode only (0 otherwise)
  bool covariance_bound_ok = true;
  bool anomaly = false;  // W > threshold while component covariance >= 0 (gam)
};
struct InteractionsResult {
  std::vector<PairResult> pairs;  // per mode, per pair
  std::map<std::string, InteractionMatrix> matrices;  // by mode name
  std::map<std::string, int> positive_pair_counts;    // W > 1% sigma2, by mode name
  double sigma2_T = 0;
  int trainings = 0;
};
// pair list: empty = all group pairs.
InteractionsResult run_interactions(const RunConfig& config,
                                    const std::vector<std::pair<std::string, std::string>>& pairs);

// --------------------------------------------------------- remaining variance
struct RemainingVarianceRow {
  std::string label;
  int group_count = 0;
  double residual_fraction = 0;  // cv(full model)/sigma2
};
struct RemainingVarianceResult {
  std::vector<RemainingVarianceRow> rows;  // first row: unrestricted baseline
  double sigma2_T = 0;
};
// grouping specs: "features" (singletons), "random:K", or a JSON path.
RemainingVarianceResult run_remaining_variance(const RunConfig& config,
                                               const std::vector<std::string>& grouping_specs);

// --------------------------------------------------------------------- verify
struct VerifyResult {
  std::vector<VerdictRecord> verdicts;
  bool identities_pass = true;  // hard verdicts all pass
  int anomalies_without_reuse = -1;  // anomaly scenario only
  int anomalies_with_reuse = -1;
};
VerifyResult run_verify(const RunConfig& config);
// Correlated additive synthetic whose generous round budget overfits
// separately trained single-group models: demonstrates spurious positive
// restricted interactions and their disappearance under component reuse.
VerifyResult run_anomaly_scenario(const RunConfig& config);

// ---------------------------------------------------------------------- count
struct CountResult {
  uint64_t orderings = 0;
  uint64_t prefixes = 0;
};
CountResult run_count(const std::string& dag_path);

// ---------------------------------------------------------------------- synth
// Writes the synthetic dataset as CSV; returns the row count.
int run_synth(const SyntheticSpec& spec, const std::string& out_path);

}  // namespace varshap
