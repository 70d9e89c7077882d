#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace varshap {

// Column-major numeric table with a designated target column.
// Immutable after construction by convention: all pipeline stages copy row
// subsets instead of mutating, so datasets are safe to share across threads.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> columns;  // [feature][row]
  std::vector<double> target;
  std::string target_name;

  int row_count() const { return static_cast<int>(target.size()); }
  int feature_count() const { return static_cast<int>(feature_names.size()); }

  // Index of a named feature, -1 when absent.
  int feature_index(const std::string& name) const;

  // Throws std::runtime_error on invariant violations: ragged columns,
  // duplicate/empty feature names, non-finite values.
  void validate() const;

  Dataset select_rows(const std::vector<int>& rows) const;
  Dataset with_target(std::vector<double> new_target, std::string new_target_name) const;
};

struct LoadResult {
  Dataset data;
  int dropped_rows = 0;  // rows removed for unparseable/missing/non-finite cells
};

// CSV ingestion: first row is the header, comma separators, '.' decimals.
// The target column is removed from the feature set. When feature_names is
// non-empty only those columns are kept (in the given order).
LoadResult load_csv(const std::string& path, const std::string& target_name,
                    const std::vector<std::string>& feature_names = {});

void save_csv(const Dataset& data, const std::string& path);

// Three-way split ratios plus the seed for the deterministic row shuffle.
struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  uint64_t seed = 0;

  void validate() const;  // ratios >= 0, sum to 1 within 1e-9
};

struct Splits {
  Dataset train, val, test;
};

// Deterministic exact partition: val/test sizes are floor(n*ratio), the
// remainder goes to train. Requires at least 3 rows.
Splits split(const Dataset& data, const SplitSpec& spec);

// Compensated (Neumaier) summation: reductions over large test splits stay
// accurate enough for the 1e-6/1e-9 identity checks regardless of row count.
struct NeumaierSum {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  double total() const { return sum + compensation; }
};

double mean_of(const std::vector<double>& values);
// Population variance (divide by n) about the vector's own mean.
double population_variance(const std::vector<double>& values);
// Population covariance (divide by n).
double population_covariance(const std::vector<double>& a, const std::vector<double>& b);
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

// FNV-1a over names, layout, and raw value bytes; keys model caches.
uint64_t dataset_fingerprint(const Dataset& data);
uint64_t fnv1a(const void* bytes, size_t len, uint64_t h = 1469598103934665603ull);
uint64_t fnv1a_str(const std::string& s, uint64_t h = 1469598103934665603ull);

}  // namespace varshap
