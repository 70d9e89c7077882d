#include "varshap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "varshap/rng.hpp"

namespace varshap {

int Dataset::feature_index(const std::string& name) const {
  for (int i = 0; i < feature_count(); ++i) {
    if (feature_names[i] == name) return i;
  }
  return -1;
}

void Dataset::validate() const {
  if (columns.size() != feature_names.size()) {
    throw std::runtime_error("dataset: column count does not match feature names");
  }
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    if (name.empty()) throw std::runtime_error("dataset: empty feature name");
    if (!seen.insert(name).second) {
      throw std::runtime_error("dataset: duplicate feature name '" + name + "'");
    }
  }
  size_t n = target.size();
  for (size_t f = 0; f < columns.size(); ++f) {
    if (columns[f].size() != n) {
      throw std::runtime_error("dataset: column '" + feature_names[f] +
                               "' length does not match target length");
    }
    for (double v : columns[f]) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("dataset: non-finite value in column '" + feature_names[f] + "'");
      }
    }
  }
  for (double v : target) {
    if (!std::isfinite(v)) throw std::runtime_error("dataset: non-finite target value");
  }
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.columns.resize(columns.size());
  for (size_t f = 0; f < columns.size(); ++f) {
    out.columns[f].reserve(rows.size());
    for (int r : rows) out.columns[f].push_back(columns[f][r]);
  }
  out.target.reserve(rows.size());
  for (int r : rows) out.target.push_back(target[r]);
  return out;
}

Dataset Dataset::with_target(std::vector<double> new_target, std::string new_target_name) const {
  if (new_target.size() != target.size()) {
    throw std::runtime_error("with_target: length mismatch");
  }
  Dataset out = *this;
  out.target = std::move(new_target);
  out.target_name = std::move(new_target_name);
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& raw, double& out) {
  std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) return false;
  return std::isfinite(out);
}

}  // namespace

LoadResult load_csv(const std::string& path, const std::string& target_name,
                    const std::vector<std::string>& feature_names) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw std::runtime_error("load_csv: empty file '" + path + "'");
  }
  std::vector<std::string> header = split_csv_line(header_line);
  for (auto& h : header) h = trim(h);

  int target_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target_name) target_col = static_cast<int>(i);
  }
  if (target_col < 0) {
    throw std::runtime_error("load_csv: target column '" + target_name + "' not found in '" +
                             path + "'");
  }

  // Columns to keep as features, in output order.
  std::vector<int> feature_cols;
  std::vector<std::string> out_names;
  if (feature_names.empty()) {
    for (size_t i = 0; i < header.size(); ++i) {
      if (static_cast<int>(i) == target_col) continue;
      feature_cols.push_back(static_cast<int>(i));
      out_names.push_back(header[i]);
    }
  } else {
    for (const auto& want : feature_names) {
      int col = -1;
      for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == want) col = static_cast<int>(i);
      }
      if (col < 0) {
        throw std::runtime_error("load_csv: feature column '" + want + "' not found");
      }
      if (col == target_col) {
        throw std::runtime_error("load_csv: feature '" + want + "' is the target column");
      }
      feature_cols.push_back(col);
      out_names.push_back(want);
    }
  }

  Dataset data;
  data.feature_names = out_names;
  data.target_name = target_name;
  data.columns.resize(feature_cols.size());

  int dropped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      ++dropped;
      continue;
    }
    double t;
    if (!parse_double(cells[target_col], t)) {
      ++dropped;
      continue;
    }
    std::vector<double> row(feature_cols.size());
    bool ok = true;
    for (size_t f = 0; f < feature_cols.size(); ++f) {
      if (!parse_double(cells[feature_cols[f]], row[f])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    for (size_t f = 0; f < feature_cols.size(); ++f) data.columns[f].push_back(row[f]);
    data.target.push_back(t);
  }

  if (data.target.empty()) {
    throw std::runtime_error("load_csv: zero usable rows in '" + path + "'");
  }
  data.validate();
  return LoadResult{std::move(data), dropped};
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot write '" + path + "'");
  out.precision(17);
  for (int f = 0; f < data.feature_count(); ++f) out << data.feature_names[f] << ",";
  out << data.target_name << "\n";
  for (int r = 0; r < data.row_count(); ++r) {
    for (int f = 0; f < data.feature_count(); ++f) out << data.columns[f][r] << ",";
    out << data.target[r] << "\n";
  }
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0) {
    throw std::runtime_error("split: ratios must be nonnegative");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw std::runtime_error("split: ratios must sum to 1");
  }
}

Splits split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  int n = data.row_count();
  if (n < 3) throw std::runtime_error("split: need at least 3 rows");

  // floor the val/test sizes; the remainder (rounding slack) goes to train.
  int n_val = static_cast<int>(std::floor(spec.val * n));
  int n_test = static_cast<int>(std::floor(spec.test * n));
  int n_train = n - n_val - n_test;
  if (n_train < 0) throw std::runtime_error("split: ratios leave no training rows");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(spec.seed);
  shuffle_indices(order, rng);

  std::vector<int> train_rows(order.begin(), order.begin() + n_train);
  std::vector<int> val_rows(order.begin() + n_train, order.begin() + n_train + n_val);
  std::vector<int> test_rows(order.begin() + n_train + n_val, order.end());

  return Splits{data.select_rows(train_rows), data.select_rows(val_rows),
                data.select_rows(test_rows)};
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  NeumaierSum sum;
  for (double v : values) sum.add(v);
  return sum.total() / static_cast<double>(values.size());
}

double population_variance(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mu = mean_of(values);
  NeumaierSum sum;
  for (double v : values) sum.add((v - mu) * (v - mu));
  return sum.total() / static_cast<double>(values.size());
}

double population_covariance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::runtime_error("covariance: length mismatch");
  if (a.empty()) return 0.0;
  double ma = mean_of(a), mb = mean_of(b);
  NeumaierSum sum;
  for (size_t i = 0; i < a.size(); ++i) sum.add((a[i] - ma) * (b[i] - mb));
  return sum.total() / static_cast<double>(a.size());
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double va = population_variance(a), vb = population_variance(b);
  if (va <= 0 || vb <= 0) return 0.0;
  return population_covariance(a, b) / std::sqrt(va * vb);
}

uint64_t fnv1a(const void* bytes, size_t len, uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t fnv1a_str(const std::string& s, uint64_t h) { return fnv1a(s.data(), s.size(), h); }

uint64_t dataset_fingerprint(const Dataset& data) {
  uint64_t h = 1469598103934665603ull;
  h = fnv1a_str(data.target_name, h);
  for (const auto& name : data.feature_names) h = fnv1a_str(name, h);
  int n = data.row_count();
  h = fnv1a(&n, sizeof(n), h);
  for (const auto& col : data.columns) {
    h = fnv1a(col.data(), col.size() * sizeof(double), h);
  }
  h = fnv1a(data.target.data(), data.target.size() * sizeof(double), h);
  return h;
}

}  // namespace varshap
