#include "varshap/dag.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "varshap/rng.hpp"
#include "varshap/serialize.hpp"

namespace varshap {

int CausalDag::node_index(const std::string& name) const {
  for (int i = 0; i < node_count(); ++i) {
    if (nodes[i] == name) return i;
  }
  return -1;
}

void CausalDag::validate() const {
  std::set<std::string> names;
  for (const auto& name : nodes) {
    if (name.empty()) throw std::runtime_error("dag: empty node name");
    if (!names.insert(name).second) throw std::runtime_error("dag: duplicate node '" + name + "'");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= node_count() || b < 0 || b >= node_count()) {
      throw std::runtime_error("dag: edge endpoint out of range");
    }
    if (a == b) throw std::runtime_error("dag: self-loop on '" + nodes[a] + "'");
    if (!seen.insert({a, b}).second) {
      throw std::runtime_error("dag: duplicate edge " + nodes[a] + " -> " + nodes[b]);
    }
  }

  // Kahn's algorithm; leftover nodes witness a cycle, reported by walking
  // parent links inside the leftover set until a repeat.
  std::vector<int> indegree(node_count(), 0);
  std::vector<std::vector<int>> children(node_count());
  for (const auto& [a, b] : edges) {
    indegree[b]++;
    children[a].push_back(b);
  }
  std::vector<int> queue;
  for (int i = 0; i < node_count(); ++i) {
    if (indegree[i] == 0) queue.push_back(i);
  }
  int visited = 0;
  while (!queue.empty()) {
    int u = queue.back();
    queue.pop_back();
    ++visited;
    for (int v : children[u]) {
      if (--indegree[v] == 0) queue.push_back(v);
    }
  }
  if (visited != node_count()) {
    std::vector<char> leftover(node_count(), 0);
    for (int i = 0; i < node_count(); ++i) leftover[i] = indegree[i] > 0;
    int start = 0;
    while (!leftover[start]) ++start;
    std::vector<int> path;
    std::vector<int> seen_at(node_count(), -1);
    int cur = start;
    while (seen_at[cur] < 0) {
      seen_at[cur] = static_cast<int>(path.size());
      path.push_back(cur);
      for (const auto& [a, b] : edges) {
        if (b == cur && leftover[a]) {
          cur = a;
          break;
        }
      }
    }
    std::string cycle;
    for (size_t i = seen_at[cur]; i < path.size(); ++i) {
      if (!cycle.empty()) cycle += " <- ";
      cycle += nodes[path[i]];
    }
    throw std::runtime_error("dag: cycle detected (" + cycle + ")");
  }
}

std::vector<uint64_t> CausalDag::parent_masks() const {
  if (node_count() > 64) throw std::runtime_error("dag: more than 64 nodes");
  std::vector<uint64_t> masks(node_count(), 0);
  for (const auto& [a, b] : edges) masks[b] |= 1ull << a;
  return masks;
}

CausalDag parse_dag_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  CausalDag dag;
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw std::runtime_error("dag: missing 'nodes' array");
  }
  for (const auto& n : doc["nodes"]) dag.nodes.push_back(n.get<std::string>());
  if (doc.contains("edges")) {
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2) {
        throw std::runtime_error("dag: edges must be [from, to] pairs");
      }
      std::string from = e[0].get<std::string>();
      std::string to = e[1].get<std::string>();
      int a = dag.node_index(from);
      int b = dag.node_index(to);
      if (a < 0) throw std::runtime_error("dag: unknown node '" + from + "' in edge");
      if (b < 0) throw std::runtime_error("dag: unknown node '" + to + "' in edge");
      dag.edges.push_back({a, b});
    }
  }
  dag.validate();
  return dag;
}

CausalDag parse_dag_file(const std::string& path) { return parse_dag_text(read_text_file(path)); }

namespace {

// Linear-extension count of the sub-DAG induced by the complement of `placed`
// via memoized recursion over downward-closed sets: f(placed) = sum over
// available nodes v of f(placed | v).
uint64_t count_from(uint64_t placed, uint64_t full, const std::vector<uint64_t>& parents,
                    std::unordered_map<uint64_t, uint64_t>& memo) {
  if (placed == full) return 1;
  auto it = memo.find(placed);
  if (it != memo.end()) return it->second;
  uint64_t total = 0;
  int n = static_cast<int>(parents.size());
  for (int v = 0; v < n; ++v) {
    uint64_t bit = 1ull << v;
    if ((placed & bit) || (parents[v] & ~placed)) continue;
    total += count_from(placed | bit, full, parents, memo);
  }
  memo[placed] = total;
  return total;
}

}  // namespace

uint64_t count_orderings(const CausalDag& dag, int node_limit) {
  dag.validate();
  if (dag.node_count() > node_limit) {
    throw std::runtime_error("count_orderings: node count exceeds the exact-count limit of " +
                             std::to_string(node_limit));
  }
  if (dag.node_count() == 0) return 1;
  std::vector<uint64_t> parents = dag.parent_masks();
  uint64_t full = dag.node_count() == 64 ? ~0ull : (1ull << dag.node_count()) - 1;
  std::unordered_map<uint64_t, uint64_t> memo;
  return count_from(0, full, parents, memo);
}

uint64_t count_prefix_sets(const CausalDag& dag) {
  dag.validate();
  if (dag.node_count() == 0) return 0;
  std::vector<uint64_t> parents = dag.parent_masks();
  // BFS over order ideals: every reachable placed-set is a valid prefix.
  std::set<uint64_t> seen{0};
  std::vector<uint64_t> frontier{0};
  while (!frontier.empty()) {
    uint64_t placed = frontier.back();
    frontier.pop_back();
    for (int v = 0; v < dag.node_count(); ++v) {
      uint64_t bit = 1ull << v;
      if ((placed & bit) || (parents[v] & ~placed)) continue;
      uint64_t next = placed | bit;
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return static_cast<uint64_t>(seen.size()) - 1;  // exclude the empty prefix
}

namespace {

void enumerate_from(uint64_t placed, uint64_t full, const std::vector<uint64_t>& parents,
                    std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (placed == full) {
    out.push_back(current);
    return;
  }
  int n = static_cast<int>(parents.size());
  for (int v = 0; v < n; ++v) {
    uint64_t bit = 1ull << v;
    if ((placed & bit) || (parents[v] & ~placed)) continue;
    current.push_back(v);
    enumerate_from(placed | bit, full, parents, current, out);
    current.pop_back();
  }
}

}  // namespace

OrderingSet enumerate_orderings(const CausalDag& dag, uint64_t cap, uint64_t seed) {
  if (cap < 1) throw std::runtime_error("enumerate_orderings: cap must be >= 1");
  dag.validate();
  OrderingSet set;
  set.total_count = count_orderings(dag);

  if (dag.node_count() == 0) {
    set.orderings.push_back({});
    set.weights.push_back(1.0);
    set.exact = true;
    return set;
  }

  std::vector<uint64_t> parents = dag.parent_masks();
  uint64_t full = dag.node_count() == 64 ? ~0ull : (1ull << dag.node_count()) - 1;

  if (set.total_count <= cap) {
    // Exhaustive DFS in ascending node order -> deterministic lexicographic list.
    std::vector<int> current;
    enumerate_from(0, full, parents, current, set.orderings);
    set.exact = true;
    set.weights.assign(set.orderings.size(), 1.0 / static_cast<double>(set.orderings.size()));
    return set;
  }

  // Randomized topological draws. A draw picking uniformly among available
  // nodes has probability prod(1/|avail_i|), so weighting each sample by
  // prod(|avail_i|) (normalized) importance-corrects toward uniform.
  set.exact = false;
  CounterRng rng(seed);
  std::vector<double> raw_weights;
  for (uint64_t s = 0; s < cap; ++s) {
    uint64_t placed = 0;
    std::vector<int> ordering;
    double log_weight = 0.0;
    while (placed != full) {
      std::vector<int> avail;
      for (int v = 0; v < dag.node_count(); ++v) {
        uint64_t bit = 1ull << v;
        if ((placed & bit) || (parents[v] & ~placed)) continue;
        avail.push_back(v);
      }
      int pick = avail[static_cast<size_t>(rng.next_below(avail.size()))];
      log_weight += std::log(static_cast<double>(avail.size()));
      ordering.push_back(pick);
      placed |= 1ull << pick;
    }
    set.orderings.push_back(std::move(ordering));
    raw_weights.push_back(log_weight);
  }
  // Normalize in log space to dodge overflow on long orderings.
  double max_log = *std::max_element(raw_weights.begin(), raw_weights.end());
  double sum = 0.0;
  for (double lw : raw_weights) sum += std::exp(lw - max_log);
  set.weights.resize(raw_weights.size());
  for (size_t i = 0; i < raw_weights.size(); ++i) {
    set.weights[i] = std::exp(raw_weights[i] - max_log) / sum;
  }
  return set;
}

std::vector<int> predecessors_in(const std::vector<int>& ordering, int position) {
  if (position < 0 || position >= static_cast<int>(ordering.size())) {
    throw std::runtime_error("predecessors_in: position out of range");
  }
  return std::vector<int>(ordering.begin(), ordering.begin() + position);
}

bool is_topological(const CausalDag& dag, const std::vector<int>& ordering) {
  if (static_cast<int>(ordering.size()) != dag.node_count()) return false;
  std::vector<int> pos(dag.node_count(), -1);
  for (int i = 0; i < static_cast<int>(ordering.size()); ++i) {
    int v = ordering[i];
    if (v < 0 || v >= dag.node_count() || pos[v] >= 0) return false;
    pos[v] = i;
  }
  for (const auto& [a, b] : dag.edges) {
    if (pos[a] >= pos[b]) return false;
  }
  return true;
}

std::vector<std::vector<int>> orderings_as_group_ids(const CausalDag& dag,
                                                     const OrderingSet& orderings,
                                                     const FeatureGrouping& grouping) {
  if (dag.node_count() != grouping.group_count()) {
    throw std::runtime_error("dag nodes do not cover the grouping (count mismatch)");
  }
  std::vector<int> node_to_group(dag.node_count());
  for (int i = 0; i < dag.node_count(); ++i) {
    int g = grouping.group_index(dag.nodes[i]);
    if (g < 0) {
      throw std::runtime_error("dag node '" + dag.nodes[i] + "' is not a group name");
    }
    node_to_group[i] = g;
  }
  std::vector<std::vector<int>> out;
  out.reserve(orderings.orderings.size());
  for (const auto& ordering : orderings.orderings) {
    std::vector<int> mapped(ordering.size());
    for (size_t i = 0; i < ordering.size(); ++i) mapped[i] = node_to_group[ordering[i]];
    out.push_back(std::move(mapped));
  }
  return out;
}

CausalDag empty_dag(const FeatureGrouping& grouping) {
  CausalDag dag;
  for (int g = 0; g < grouping.group_count(); ++g) dag.nodes.push_back(grouping.name(g));
  return dag;
}

}  // namespace varshap
