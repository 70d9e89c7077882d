#include "varshap/report_io.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace varshap {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json verdict_to_json_value(const VerdictRecord& v) {
  ordered_json out;
  out["name"] = v.name;
  out["pass"] = v.pass;
  out["kind"] = v.hard ? "identity" : "tolerance";
  out["max_deviation"] = v.max_deviation;
  out["tolerance"] = v.tolerance;
  out["detail"] = v.detail;
  return out;
}

std::string fixed(double v, int places) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(places) << v;
  return out.str();
}

}  // namespace

std::string report_to_json(const AttributionReport& report) {
  ordered_json out;
  out["mode"] = model_mode_name(report.mode);
  out["target"] = report.target_id;
  out["sigma2_T"] = report.sigma2_T;
  out["phi_0"] = report.phi_0;
  ordered_json contributions = ordered_json::object();
  for (size_t g = 0; g < report.group_names.size(); ++g) {
    ordered_json entry;
    entry["value"] = report.contributions[g];
    entry["percent"] =
        report.sigma2_T > 0 ? 100.0 * report.contributions[g] / report.sigma2_T : 0.0;
    contributions[report.group_names[g]] = entry;
  }
  out["contributions"] = contributions;
  out["phi_I"] = report.phi_I;
  out["residual_variance"] = report.residual_variance;
  ordered_json meta;
  meta["exact"] = report.ordering_meta.exact;
  meta["total_orderings"] = report.ordering_meta.total_orderings;
  meta["used_orderings"] = report.ordering_meta.used_orderings;
  meta["cap"] = report.ordering_meta.cap;
  meta["distinct_prefixes"] = report.ordering_meta.distinct_prefixes;
  out["ordering_meta"] = meta;
  ordered_json verdicts = ordered_json::array();
  for (const VerdictRecord& v : report.verdicts) verdicts.push_back(verdict_to_json_value(v));
  out["verdicts"] = verdicts;
  return out.dump(2) + "\n";
}

std::string report_to_table(const AttributionReport& report) {
  size_t name_width = 12;
  for (const std::string& name : report.group_names) {
    name_width = std::max(name_width, name.size());
  }
  std::ostringstream out;
  out << "mode: " << model_mode_name(report.mode) << "   target: " << report.target_id << "\n";
  out << "orderings: " << report.ordering_meta.used_orderings << " of "
      << report.ordering_meta.total_orderings
      << (report.ordering_meta.exact ? " (exhaustive)" : " (sampled)")
      << "   estimators: " << report.ordering_meta.distinct_prefixes << "\n";
  auto row = [&](const std::string& label, double value) {
    out << "  " << std::left << std::setw(static_cast<int>(name_width)) << label << "  "
        << std::right << std::setw(14) << fixed(value, 4) << "  " << std::setw(9)
        << fixed(report.sigma2_T > 0 ? 100.0 * value / report.sigma2_T : 0.0, 2) << "%\n";
  };
  out << "  " << std::left << std::setw(static_cast<int>(name_width)) << "term"
      << "  " << std::right << std::setw(14) << "value" << "  " << std::setw(10) << "% of var\n";
  row("phi_0", report.phi_0);
  for (size_t g = 0; g < report.group_names.size(); ++g) {
    row(report.group_names[g], report.contributions[g]);
  }
  if (report.mode == ModelMode::gam) row("phi_I", report.phi_I);
  row("residual", report.residual_variance);
  return out.str();
}

std::string verdicts_to_json(const std::vector<VerdictRecord>& verdicts) {
  ordered_json out = ordered_json::array();
  for (const VerdictRecord& v : verdicts) out.push_back(verdict_to_json_value(v));
  return out.dump(2) + "\n";
}

std::string remaining_variance_to_csv(const RemainingVarianceResult& result) {
  std::ostringstream out;
  out << "grouping,group_count,residual_fraction\n";
  out.precision(12);
  for (const RemainingVarianceRow& row : result.rows) {
    out << row.label << "," << row.group_count << "," << row.residual_fraction << "\n";
  }
  return out.str();
}

std::string remaining_variance_to_table(const RemainingVarianceResult& result) {
  size_t label_width = 10;
  for (const RemainingVarianceRow& row : result.rows) {
    label_width = std::max(label_width, row.label.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "grouping"
      << "  groups  unexplained fraction\n";
  for (const RemainingVarianceRow& row : result.rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << row.label << "  "
        << std::right << std::setw(6) << row.group_count << "  " << std::setw(19)
        << fixed(row.residual_fraction, 4) << "\n";
  }
  return out.str();
}

std::string pair_results_to_csv(const InteractionsResult& result,
                                const FeatureGrouping& grouping) {
  std::ostringstream out;
  out << "mode,group_a,group_b,L_a,L_b,L_ab,W,W_percent,component_covariance,"
         "covariance_bound_ok,anomaly\n";
  out.precision(12);
  for (const PairResult& pr : result.pairs) {
    double percent = result.sigma2_T > 0 ? 100.0 * pr.W / result.sigma2_T : 0.0;
    out << model_mode_name(pr.mode) << "," << grouping.name(pr.group_a) << ","
        << grouping.name(pr.group_b) << "," << pr.L_a << "," << pr.L_b << "," << pr.L_ab << ","
        << pr.W << "," << percent << ",";
    if (pr.mode == ModelMode::gam) {
      out << pr.component_cov << "," << (pr.covariance_bound_ok ? "true" : "false") << ","
          << (pr.anomaly ? "true" : "false");
    } else {
      out << ",,";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace varshap
