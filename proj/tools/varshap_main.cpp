#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "varshap/pipeline.hpp"
#include "varshap/report_io.hpp"
#include "varshap/serialize.hpp"

namespace {

using varshap::RunConfig;

struct CliOptions {
  std::string config_path;
  std::string csv_path;
  std::string target_name;
  std::vector<std::string> features;
  std::string synthetic_example;
  int synthetic_n = 10000;
  std::string grouping_path;
  int random_group_size = 0;
  std::string dag_path;
  std::string modes = "both";
  uint64_t seed = 1;
  double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;
  std::string out_dir;
  std::string cache_dir;
  uint64_t ordering_cap = 2000;
  bool component_reuse = false;
  bool self_explain = false;
  int jobs = 1;
  double epsilon_model = 0.02;
  int max_trainings = 2000;

  int rounds = 0;
  double learning_rate = 0.0;
  int max_depth = 0;
  int gam_max_depth = 0;
  int min_samples_leaf = 0;
  int early_stopping = -1;
  std::string schedule;
};

void add_run_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path,
                  "JSON config file; explicit flags take precedence over its keys");
  cmd->add_option("--csv", opt.csv_path, "CSV dataset (header row, numeric cells)");
  cmd->add_option("--target", opt.target_name, "target column name");
  cmd->add_option("--feature", opt.features, "keep only these feature columns (repeatable)");
  cmd->add_option("--synthetic", opt.synthetic_example,
                  "built-in generator: pairwise_independence | nonlinearity | non_additive | "
                  "rank_deficiency");
  cmd->add_option("--synthetic-n", opt.synthetic_n, "synthetic row count");
  cmd->add_option("--grouping", opt.grouping_path,
                  "JSON file mapping group name -> feature names");
  cmd->add_option("--random-groups", opt.random_group_size,
                  "shuffle features into groups of this size");
  cmd->add_option("--dag", opt.dag_path, "causal DAG JSON over the group names");
  cmd->add_option("--modes", opt.modes, "unrestricted | gam | both")
      ->check(CLI::IsMember({"unrestricted", "gam", "both"}));
  cmd->add_option("--seed", opt.seed, "seed for splits, sampling, and training order");
  cmd->add_option("--train-ratio", opt.train_ratio, "train split fraction");
  cmd->add_option("--val-ratio", opt.val_ratio, "validation split fraction");
  cmd->add_option("--test-ratio", opt.test_ratio, "test split fraction");
  cmd->add_option("--out", opt.out_dir, "output directory for reports, CSVs, and figures");
  cmd->add_option("--cache", opt.cache_dir,
                  "model cache directory (default <out>/cache; VARSHAP_CACHE overrides)");
  cmd->add_option("--ordering-cap", opt.ordering_cap,
                  "max admissible orderings before switching to sampling");
  cmd->add_flag("--component-reuse", opt.component_reuse,
                "serve single-group additive estimators from the full additive model's components");
  cmd->add_flag("--self-explain", opt.self_explain,
                "replace the target with the full model's predictions before attribution");
  cmd->add_option("--jobs", opt.jobs, "parallel estimator trainings");
  cmd->add_option("--epsilon-model", opt.epsilon_model,
                  "estimator-noise slack as a fraction of the target variance");
  cmd->add_option("--max-trainings", opt.max_trainings, "training budget for scans");

  cmd->add_option("--rounds", opt.rounds, "boosting rounds (both modes)");
  cmd->add_option("--learning-rate", opt.learning_rate, "shrinkage in (0,1] (both modes)");
  cmd->add_option("--max-depth", opt.max_depth, "tree depth (both modes)");
  cmd->add_option("--gam-max-depth", opt.gam_max_depth, "tree depth for the additive mode only");
  cmd->add_option("--min-samples-leaf", opt.min_samples_leaf, "minimum rows per leaf");
  cmd->add_option("--early-stopping", opt.early_stopping,
                  "patience in rounds; 0 disables early stopping");
  cmd->add_option("--schedule", opt.schedule, "additive-mode group schedule: greedy | cyclic")
      ->check(CLI::IsMember({"greedy", "cyclic"}));
}

RunConfig build_config(const CLI::App* cmd, const CliOptions& opt) {
  RunConfig config;
  if (!opt.config_path.empty()) {
    config = varshap::parse_run_config_json(varshap::read_text_file(opt.config_path));
  }

  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  if (given("--csv")) config.csv_path = opt.csv_path;
  if (given("--target")) config.target_name = opt.target_name;
  if (given("--feature")) config.feature_names = opt.features;
  if (given("--grouping")) config.grouping_path = opt.grouping_path;
  if (given("--random-groups")) config.random_group_size = opt.random_group_size;
  if (given("--dag")) config.dag_path = opt.dag_path;
  if (given("--modes")) config.modes = opt.modes;
  if (given("--seed")) config.seed = opt.seed;
  if (given("--train-ratio")) config.train_ratio = opt.train_ratio;
  if (given("--val-ratio")) config.val_ratio = opt.val_ratio;
  if (given("--test-ratio")) config.test_ratio = opt.test_ratio;
  if (given("--out")) config.out_dir = opt.out_dir;
  if (given("--cache")) config.cache_dir = opt.cache_dir;
  if (given("--ordering-cap")) config.ordering_cap = opt.ordering_cap;
  if (given("--component-reuse")) config.component_reuse = opt.component_reuse;
  if (given("--self-explain")) config.self_explain = opt.self_explain;
  if (given("--jobs")) config.jobs = opt.jobs;
  if (given("--epsilon-model")) config.epsilon_model = opt.epsilon_model;
  if (given("--max-trainings")) config.max_trainings = opt.max_trainings;

  auto apply_both = [&](auto fn) {
    fn(config.params_unrestricted);
    fn(config.params_gam);
  };
  if (given("--rounds")) apply_both([&](varshap::BoostParams& b) { b.num_rounds = opt.rounds; });
  if (given("--learning-rate")) {
    apply_both([&](varshap::BoostParams& b) { b.learning_rate = opt.learning_rate; });
  }
  if (given("--max-depth")) apply_both([&](varshap::BoostParams& b) { b.max_depth = opt.max_depth; });
  if (given("--gam-max-depth")) config.params_gam.max_depth = opt.gam_max_depth;
  if (given("--min-samples-leaf")) {
    apply_both([&](varshap::BoostParams& b) { b.min_samples_leaf = opt.min_samples_leaf; });
  }
  if (given("--early-stopping")) {
    apply_both([&](varshap::BoostParams& b) { b.early_stopping_rounds = opt.early_stopping; });
  }
  if (given("--schedule")) {
    config.params_gam.group_schedule = varshap::parse_group_schedule(opt.schedule);
  }

  if (given("--synthetic")) {
    varshap::SyntheticSpec spec;
    spec.example_id = varshap::parse_example_id(opt.synthetic_example);
    spec.n = opt.synthetic_n;
    config.synthetic = spec;
  } else if (given("--synthetic-n") && config.synthetic.has_value()) {
    config.synthetic->n = opt.synthetic_n;
  }
  if (config.synthetic.has_value()) config.synthetic->seed = config.seed;
  return config;
}

void print_verdict(const varshap::VerdictRecord& v) {
  const char* tag = v.pass ? "[PASS]" : (v.hard ? "[FAIL]" : "[WARN]");
  std::printf("%s %s  (max deviation %.3e, tolerance %.3e)\n", tag, v.name.c_str(),
              v.max_deviation, v.tolerance);
  if (!v.pass) std::printf("       %s\n", v.detail.c_str());
}

int exit_code_for_verdicts(const std::vector<varshap::VerdictRecord>& verdicts) {
  for (const auto& v : verdicts) {
    if (v.hard && !v.pass) return varshap::exit_verification_failure;
  }
  return varshap::exit_success;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-reduction attribution for regression models"};
  app.require_subcommand(1);

  CliOptions opt;

  CLI::App* attribute = app.add_subcommand(
      "attribute", "causally ordered group contributions to variance reduction");
  add_run_options(attribute, opt);

  CLI::App* interactions =
      app.add_subcommand("interactions", "pairwise interaction-of-variance-reduction scan");
  add_run_options(interactions, opt);
  std::vector<std::string> pair_args;
  interactions->add_option("--pair", pair_args,
                           "group pair as 'A,B' (repeatable; default: all pairs)");

  CLI::App* remaining = app.add_subcommand(
      "remaining-variance", "unexplained variance fraction per grouping granularity");
  add_run_options(remaining, opt);
  std::vector<std::string> grouping_specs;
  remaining->add_option("--grouping-spec", grouping_specs,
                        "'features', 'random:<size>', or a grouping JSON path (repeatable)");

  CLI::App* verify = app.add_subcommand("verify", "run the built-in identity and bound checks");
  add_run_options(verify, opt);
  bool anomaly_scenario = false;
  verify->add_flag("--anomaly-scenario", anomaly_scenario,
                   "demonstrate spurious positive interactions from separately trained "
                   "single-group models, then their removal under --component-reuse semantics");

  CLI::App* count = app.add_subcommand("count", "ordering and estimator counts for a causal DAG");
  std::string count_dag_path;
  count->add_option("dag", count_dag_path, "DAG JSON file")->required();

  CLI::App* synth = app.add_subcommand("synth", "write a built-in synthetic dataset as CSV");
  std::string synth_example;
  std::string synth_out;
  int synth_n = 10000;
  uint64_t synth_seed = 1;
  synth->add_option("example", synth_example, "generator name")->required();
  synth->add_option("out", synth_out, "output CSV path")->required();
  synth->add_option("--n", synth_n, "row count");
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? varshap::exit_success : varshap::exit_config_error;
  }

  try {
    if (attribute->parsed()) {
      RunConfig config = build_config(attribute, opt);
      varshap::AttributeResult result = varshap::run_attribute(config);
      int code = varshap::exit_success;
      for (const varshap::AttributionReport& report : result.reports) {
        std::printf("%s", varshap::report_to_table(report).c_str());
        for (const auto& v : report.verdicts) print_verdict(v);
        std::printf("\n");
        if (exit_code_for_verdicts(report.verdicts) != varshap::exit_success) {
          code = varshap::exit_verification_failure;
        }
      }
      if (!result.out_dir.empty()) std::printf("artifacts written to %s\n", result.out_dir.c_str());
      return code;
    }

    if (interactions->parsed()) {
      RunConfig config = build_config(interactions, opt);
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const std::string& raw : pair_args) {
        size_t comma = raw.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= raw.size()) {
          throw varshap::ConfigError("bad --pair '" + raw + "' (expected 'A,B')");
        }
        pairs.emplace_back(raw.substr(0, comma), raw.substr(comma + 1));
      }
      varshap::InteractionsResult result = varshap::run_interactions(config, pairs);
      for (const auto& [mode_name, positive] : result.positive_pair_counts) {
        std::printf("%s: %d of %zu pairs with interaction > +1%% of target variance\n",
                    mode_name.c_str(), positive, result.pairs.size() / result.matrices.size());
      }
      std::printf("estimator trainings: %d\n", result.trainings);
      if (!config.out_dir.empty()) std::printf("artifacts written to %s\n", config.out_dir.c_str());
      return varshap::exit_success;
    }

    if (remaining->parsed()) {
      RunConfig config = build_config(remaining, opt);
      if (grouping_specs.empty()) grouping_specs = {"features"};
      varshap::RemainingVarianceResult result =
          varshap::run_remaining_variance(config, grouping_specs);
      std::printf("%s", varshap::remaining_variance_to_table(result).c_str());
      if (!config.out_dir.empty()) std::printf("artifacts written to %s\n", config.out_dir.c_str());
      return varshap::exit_success;
    }

    if (verify->parsed()) {
      RunConfig config = build_config(verify, opt);
      varshap::VerifyResult result =
          anomaly_scenario ? varshap::run_anomaly_scenario(config) : varshap::run_verify(config);
      for (const auto& v : result.verdicts) print_verdict(v);
      if (result.anomalies_without_reuse >= 0) {
        std::printf("anomalous pairs: %d separately trained, %d with component reuse\n",
                    result.anomalies_without_reuse, result.anomalies_with_reuse);
      }
      return exit_code_for_verdicts(result.verdicts);
    }

    if (count->parsed()) {
      varshap::CountResult result = varshap::run_count(count_dag_path);
      std::printf("admissible orderings: %llu\n",
                  static_cast<unsigned long long>(result.orderings));
      std::printf("distinct nonempty prefixes (estimators per mode): %llu\n",
                  static_cast<unsigned long long>(result.prefixes));
      return varshap::exit_success;
    }

    if (synth->parsed()) {
      varshap::SyntheticSpec spec;
      spec.example_id = varshap::parse_example_id(synth_example);
      spec.n = synth_n;
      spec.seed = synth_seed;
      int rows = varshap::run_synth(spec, synth_out);
      std::printf("wrote %d rows to %s\n", rows, synth_out.c_str());
      return varshap::exit_success;
    }
  } catch (const varshap::BudgetError& e) {
    std::fprintf(stderr, "budget error: %s\n", e.what());
    return varshap::exit_budget_error;
  } catch (const varshap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return varshap::exit_config_error;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return varshap::exit_config_error;
  }
  return varshap::exit_config_error;
}
