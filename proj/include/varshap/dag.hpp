#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varshap/grouping.hpp"

namespace varshap {

// Directed acyclic graph over named groups: an edge a -> b means a is a
// causal ancestor of b, so admissible orderings reveal a before b.
struct CausalDag {
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> edges;  // (ancestor, descendant)

  int node_count() const { return static_cast<int>(nodes.size()); }
  int node_index(const std::string& name) const;  // -1 when absent

  // Throws on self-loops, duplicate edges, out-of-range endpoints, or cycles
  // (the error message names one offending cycle).
  void validate() const;

  // parent_masks()[v] has bit u set when u -> v is an edge. Requires <= 64 nodes.
  std::vector<uint64_t> parent_masks() const;
};

// JSON file: {"nodes": ["a", ...], "edges": [["a","b"], ...]}.
CausalDag parse_dag_file(const std::string& path);
CausalDag parse_dag_text(const std::string& text);

// Exact number of linear extensions via dynamic programming over
// downward-closed sets. Throws when node_count exceeds `node_limit`
// (default 20; results can overflow beyond that anyway: 20! < 2^64).
uint64_t count_orderings(const CausalDag& dag, int node_limit = 20);

// Number of distinct nonempty prefix sets of topological orderings
// (= nonempty order ideals, including the full set). This is the exact
// per-mode estimator-training workload of a distal-weighted run.
uint64_t count_prefix_sets(const CausalDag& dag);

// Admissible permutations with their weights. When the extension count is
// within `cap`, all orderings are enumerated with uniform weights
// (exact=true). Otherwise `cap` orderings are sampled by randomized
// topological draws; weights are importance weights proportional to the
// product of the availability-set sizes along each draw, normalized to sum
// to 1 (exact=false — not the uniform distribution, flagged in reports).
struct OrderingSet {
  std::vector<std::vector<int>> orderings;  // node indices
  bool exact = true;
  std::vector<double> weights;  // same length, sums to 1
  uint64_t total_count = 0;     // exact linear-extension count
};

OrderingSet enumerate_orderings(const CausalDag& dag, uint64_t cap, uint64_t seed);

// Groups strictly before `position` in the ordering.
std::vector<int> predecessors_in(const std::vector<int>& ordering, int position);

// True when `ordering` is a permutation of the nodes respecting every edge.
bool is_topological(const CausalDag& dag, const std::vector<int>& ordering);

// Orderings re-expressed in group ids: node i becomes
// grouping.group_index(dag.nodes[i]). Throws when a node name is not a group
// or the node set does not cover the grouping exactly.
std::vector<std::vector<int>> orderings_as_group_ids(const CausalDag& dag,
                                                     const OrderingSet& orderings,
                                                     const FeatureGrouping& grouping);

// DAG with the grouping's groups as nodes and no edges (every permutation
// admissible).
CausalDag empty_dag(const FeatureGrouping& grouping);

}  // namespace varshap
