#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treekd/errors.hpp"
#include "treekd/pattern.hpp"
#include "treekd/rng.hpp"
#include "treekd/task.hpp"

namespace treekd {

class ForestError : public Error {
 public:
  enum class Kind { EmptyInput, DimensionMismatch, BadParams, ModelFormat };
  ForestError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

enum class MaxFeaturesPolicy { All, Sqrt };

struct TreeParams {
  int max_depth = 6;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  MaxFeaturesPolicy max_features = MaxFeaturesPolicy::All;
  TaskKind task = TaskKind::Classification;
};

// Returns the benchmark defaults: Sqrt feature subsampling for
// classification forests, all features for regression.
TreeParams default_params(TaskKind task);

struct TreeNode {
  bool leaf = false;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: positive-class fraction or mean label
  long n_samples = 0;
  long n_negative = 0;  // classification leaves only
  long n_positive = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root; pre-order layout
  int depth = 0;
  TaskKind task = TaskKind::Classification;
  int dimension = 0;

  int internal_count() const;
  int leaf_count() const;

  // Rounds every threshold through the rule-text formatter (fixed 4
  // decimals) and every leaf value through the 4-significant-digit
  // formatter, storing the parsed-back numbers. Fitted trees are already
  // canonical; call this on hand-built trees before verbalizing.
  void canonicalize();
};

// CART induction. Candidate thresholds are midpoints of consecutive sorted
// distinct feature values; the split score is the Gini impurity decrease
// (classification) or weighted variance reduction (regression). Recursion
// stops at max_depth, pure nodes, nodes below min_samples_split, or when no
// split leaves both children with min_samples_leaf samples. Ties break by
// greatest decrease, then lowest feature index, then lowest threshold.
// When params.max_features is Sqrt, each node scores floor(sqrt(d)) distinct
// features drawn from *rng (required in that case); nodes are visited
// pre-order, left child first, so the draw sequence is well defined.
DecisionTree fit_tree(std::span<const FeatureVector> X, std::span<const double> y,
                      const TreeParams& params, Rng* rng = nullptr);

// Root-to-leaf descent; x[feature] <= threshold goes left. Returns the mean
// label (regression) or the positive-class fraction (classification).
double predict_tree(const DecisionTree& tree, const FeatureVector& x);

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::uint64_t seed = 0;
  TreeParams params;

  int size() const { return static_cast<int>(trees.size()); }
};

struct ForestOptions {
  bool bootstrap = true;
};

// Bagged forest: tree k trains on a bootstrap resample drawn from the
// deterministic stream (seed, k), which then also feeds that tree's per-node
// feature subsampling. Streams are independent, so growing N leaves earlier
// trees untouched. OpenMP-parallel across trees; fit_forest_serial is the
// reference implementation.
RandomForest fit_forest(std::span<const FeatureVector> X, std::span<const double> y, int n_trees,
                        const TreeParams& params, std::uint64_t seed, ForestOptions options = {});
RandomForest fit_forest_serial(std::span<const FeatureVector> X, std::span<const double> y,
                               int n_trees, const TreeParams& params, std::uint64_t seed,
                               ForestOptions options = {});

// Arithmetic mean of per-tree predictions. Addends are summed in ascending
// value order, so the result does not depend on tree order.
double predict_forest(const RandomForest& forest, const FeatureVector& x);

// Mean used by every ensemble in the library (same canonical ordering).
double ensemble_mean(std::vector<double> values);

// Serialization. Models carry the feature dimension and the FG library
// version tag; loading rejects mismatches against an expected library.
std::string tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);
std::string forest_to_json(const RandomForest& forest, const std::string& library_version,
                           int dimension);
RandomForest forest_from_json(const std::string& text, const FunctionalGroupLibrary* expected_library = nullptr);

}  // namespace treekd
