#pragma once

// Brute-force reference implementations used to check the library. These are
// deliberately naive and independent of the production code paths.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "treekd/forest.hpp"
#include "treekd/molgraph.hpp"
#include "treekd/pattern.hpp"

namespace treekd::testing {

// --- SMARTS matching -------------------------------------------------------

inline bool oracle_bond_ok(BondPred pred, BondOrder order) {
  switch (pred) {
    case BondPred::Single: return order == BondOrder::Single;
    case BondPred::Double: return order == BondOrder::Double;
    case BondPred::Triple: return order == BondOrder::Triple;
    case BondPred::Aromatic: return order == BondOrder::Aromatic;
    case BondPred::Any: return true;
    case BondPred::SingleOrAromatic:
      return order == BondOrder::Single || order == BondOrder::Aromatic;
  }
  return false;
}

// Enumerates every injective tuple (pattern atom -> molecule atom), filters
// by all atom and bond predicates, then dedups by matched-atom set.
inline std::set<std::vector<int>> oracle_match_sets(const Molecule& mol,
                                                    const SmartsPattern& pattern) {
  const int np = pattern.size();
  const int nm = static_cast<int>(mol.atoms.size());
  std::set<std::vector<int>> sets;
  std::vector<int> map(np, -1);
  std::vector<bool> used(nm, false);

  auto rec = [&](auto&& self, int p) -> void {
    if (p == np) {
      for (const SmartsBond& bond : pattern.bonds) {
        const Bond* mb = mol.bond_between(map[bond.a], map[bond.b]);
        if (mb == nullptr || !oracle_bond_ok(bond.pred, mb->order)) return;
      }
      std::vector<int> key(map);
      std::sort(key.begin(), key.end());
      sets.insert(std::move(key));
      return;
    }
    for (int m = 0; m < nm; ++m) {
      if (used[m]) continue;
      if (!pattern.atoms[p]->eval(mol, m)) continue;
      map[p] = m;
      used[m] = true;
      self(self, p + 1);
      map[p] = -1;
      used[m] = false;
    }
  };
  rec(rec, 0);
  return sets;
}

// --- ring membership --------------------------------------------------------

// An edge lies on a cycle iff removing it leaves its endpoints connected.
inline std::vector<bool> oracle_ring_atoms(const Molecule& mol) {
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<bool> in_ring(n, false);
  for (std::size_t skip = 0; skip < mol.bonds.size(); ++skip) {
    const int src = mol.bonds[skip].a;
    const int dst = mol.bonds[skip].b;
    std::vector<bool> seen(n, false);
    std::vector<int> queue{src};
    seen[src] = true;
    while (!queue.empty()) {
      const int at = queue.back();
      queue.pop_back();
      for (const auto& [nbr, edge] : mol.adjacency[at]) {
        if (edge == static_cast<int>(skip) || seen[nbr]) continue;
        seen[nbr] = true;
        queue.push_back(nbr);
      }
    }
    if (seen[dst]) {
      in_ring[src] = true;
      in_ring[dst] = true;
    }
  }
  return in_ring;
}

// --- graph isomorphism (for scaffold hashing) -------------------------------

struct PlainGraph {
  struct Node {
    int element = 0;
    bool aromatic = false;
    bool in_ring = false;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int a, int b) const {
    for (const auto& [x, y] : edges)
      if ((x == a && y == b) || (x == b && y == a)) return true;
    return false;
  }
};

inline bool oracle_isomorphic(const PlainGraph& g, const PlainGraph& h) {
  if (g.nodes.size() != h.nodes.size() || g.edges.size() != h.edges.size()) return false;
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; ok && i < n; ++i) {
      const auto& a = g.nodes[i];
      const auto& b = h.nodes[perm[i]];
      ok = a.element == b.element && a.aromatic == b.aromatic && a.in_ring == b.in_ring;
    }
    for (std::size_t e = 0; ok && e < g.edges.size(); ++e)
      ok = h.has_edge(perm[g.edges[e].first], perm[g.edges[e].second]);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// --- greedy tree induction ---------------------------------------------------

struct OracleSplit {
  bool found = false;
  double decrease = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

inline double oracle_impurity(const std::vector<double>& labels, TaskKind task) {
  const double n = static_cast<double>(labels.size());
  if (task == TaskKind::Classification) {
    long pos = 0;
    for (double l : labels) pos += l != 0.0 ? 1 : 0;
    const double p = static_cast<double>(pos) / n;
    return 2.0 * p * (1.0 - p);
  }
  double sum = 0.0, sum_sq = 0.0;
  for (double l : labels) {
    sum += l;
    sum_sq += l * l;
  }
  const double mean = sum / n;
  return sum_sq / n - mean * mean;
}

// Scores every (feature, midpoint) candidate by materializing both children,
// honoring the same stop rules and tie-breaks as the contract states.
inline OracleSplit oracle_best_split(const std::vector<FeatureVector>& X,
                                     const std::vector<double>& y,
                                     const std::vector<int>& samples, const TreeParams& params) {
  OracleSplit best;
  std::vector<double> node_labels;
  for (int i : samples) node_labels.push_back(y[i]);
  const double parent = oracle_impurity(node_labels, params.task);
  const double n = static_cast<double>(samples.size());

  const int dimension = X.empty() ? 0 : X[0].dimension;
  for (int f = 0; f < dimension; ++f) {
    std::vector<double> values;
    for (int i : samples) values.push_back(X[i].at(f));
    std::vector<double> distinct(values);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t v = 0; v + 1 < distinct.size(); ++v) {
      const double threshold = (distinct[v] + distinct[v + 1]) / 2.0;
      std::vector<double> left, right;
      for (int i : samples) (X[i].at(f) <= threshold ? left : right).push_back(y[i]);
      if (static_cast<int>(left.size()) < params.min_samples_leaf ||
          static_cast<int>(right.size()) < params.min_samples_leaf)
        continue;
      const double decrease =
          parent - (static_cast<double>(left.size()) / n) * oracle_impurity(left, params.task) -
          (static_cast<double>(right.size()) / n) * oracle_impurity(right, params.task);
      if (!best.found || decrease > best.decrease ||
          (decrease == best.decrease &&
           (f < best.feature || (f == best.feature && threshold < best.threshold)))) {
        best.found = true;
        best.decrease = decrease;
        best.feature = f;
        best.threshold = threshold;
      }
    }
  }
  return best;
}

// Walks the fitted tree alongside the oracle's own greedy recursion and
// reports the first disagreement on (feature, threshold).
inline bool oracle_tree_agrees(const DecisionTree& tree, const std::vector<FeatureVector>& X,
                               const std::vector<double>& y, const TreeParams& params) {
  std::vector<int> all(X.size());
  std::iota(all.begin(), all.end(), 0);

  auto rec = [&](auto&& self, int node_index, const std::vector<int>& samples,
                 int depth) -> bool {
    const TreeNode& node = tree.nodes[node_index];
    bool pure = true;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (y[samples[i]] != y[samples[0]]) pure = false;

    if (depth >= params.max_depth ||
        static_cast<int>(samples.size()) < params.min_samples_split || pure)
      return node.leaf;

    const OracleSplit best = oracle_best_split(X, y, samples, params);
    if (!best.found) return node.leaf;
    if (node.leaf) return false;
    if (node.feature != best.feature || node.threshold != best.threshold) return false;

    std::vector<int> left, right;
    for (int i : samples) (X[i].at(best.feature) <= best.threshold ? left : right).push_back(i);
    return self(self, node.left, left, depth + 1) && self(self, node.right, right, depth + 1);
  };
  return rec(rec, 0, all, 0);
}

// --- metrics -----------------------------------------------------------------

inline double oracle_mae(const std::vector<double>& pred, const std::vector<double>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

inline double oracle_auroc(const std::vector<double>& scores, const std::vector<double>& labels) {
  double credit = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      ++pairs;
      if (scores[i] > scores[j]) credit += 1.0;
      else if (scores[i] == scores[j]) credit += 0.5;
    }
  }
  return credit / static_cast<double>(pairs);
}

inline double oracle_auprc(const std::vector<double>& scores, const std::vector<double>& labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  long n_pos = 0;
  for (double l : labels) n_pos += l != 0.0 ? 1 : 0;
  double ap = 0.0;
  long hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0.0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

inline std::vector<double> oracle_ranks(const std::vector<double>& values) {
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double below = 0.0, equal = 0.0;
    for (double v : values) {
      if (v < values[i]) below += 1.0;
      if (v == values[i]) equal += 1.0;
    }
    // Mean of the rank range occupied by ties, 1-based.
    ranks[i] = below + (equal + 1.0) / 2.0;
  }
  return ranks;
}

inline double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = oracle_ranks(a);
  const std::vector<double> rb = oracle_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace treekd::testing
