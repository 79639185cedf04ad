#include <doctest.h>

#include <algorithm>

#include "support/oracles.hpp"
#include "treekd/forest.hpp"

using namespace treekd;

namespace {

FeatureVector vec(std::initializer_list<double> dense) {
  FeatureVector v;
  v.dimension = static_cast<int>(dense.size());
  int i = 0;
  for (double x : dense) {
    if (x != 0.0) v.counts[i] = static_cast<int>(x);
    ++i;
  }
  return v;
}

// Random sparse count vectors plus integer labels; integer-valued features
// keep midpoints exact so the oracle comparison is bit-for-bit.
void random_dataset(Rng& rng, int n, int d, TaskKind task, std::vector<FeatureVector>& X,
                    std::vector<double>& y, int max_count = 2) {
  X.clear();
  y.clear();
  for (int i = 0; i < n; ++i) {
    FeatureVector v;
    v.dimension = d;
    for (int f = 0; f < d; ++f) {
      const int count = static_cast<int>(rng.next_below(max_count + 1));
      if (count > 0) v.counts[f] = count;
    }
    X.push_back(std::move(v));
    y.push_back(task == TaskKind::Classification ? static_cast<double>(rng.next_below(2))
                                                 : static_cast<double>(rng.next_below(8)));
  }
}

}  // namespace

TEST_CASE("perfect single split") {
  const std::vector<FeatureVector> X = {vec({0}), vec({0}), vec({1}), vec({1})};
  const std::vector<double> y = {0, 0, 1, 1};
  TreeParams params;
  params.task = TaskKind::Classification;
  const DecisionTree tree = fit_tree(X, y, params);

  REQUIRE(tree.nodes.size() == 3);
  CHECK_FALSE(tree.nodes[0].leaf);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 0.5);
  CHECK(tree.depth == 1);
  CHECK(predict_tree(tree, vec({0})) == 0.0);
  CHECK(predict_tree(tree, vec({1})) == 1.0);
}

TEST_CASE("pure labels give a single leaf") {
  const std::vector<FeatureVector> X = {vec({0, 1}), vec({1, 0}), vec({1, 1})};
  const std::vector<double> y = {1, 1, 1};
  TreeParams params;
  const DecisionTree tree = fit_tree(X, y, params);
  REQUIRE(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].leaf);
  CHECK(tree.depth == 0);
  CHECK(predict_tree(tree, vec({0, 0})) == 1.0);
}

TEST_CASE("single-leaf regression tree predicts the mean") {
  const std::vector<FeatureVector> X = {vec({0}), vec({0})};
  const std::vector<double> y = {2.0, 4.0};
  TreeParams params;
  params.task = TaskKind::Regression;
  const DecisionTree tree = fit_tree(X, y, params);
  // Feature is constant, so no split exists.
  REQUIRE(tree.nodes.size() == 1);
  CHECK(predict_tree(tree, vec({0})) == 3.0);
  CHECK(predict_tree(tree, vec({1})) == 3.0);
}

TEST_CASE("error kinds") {
  TreeParams params;
  CHECK_THROWS_AS(fit_tree(std::vector<FeatureVector>{}, std::vector<double>{}, params),
                  ForestError);
  const std::vector<FeatureVector> X = {vec({0}), vec({1, 1})};
  const std::vector<double> y = {0, 1};
  CHECK_THROWS_AS(fit_tree(X, y, params), ForestError);

  const DecisionTree tree = fit_tree(std::vector<FeatureVector>{vec({0}), vec({1})},
                                     std::vector<double>{0, 1}, params);
  CHECK_THROWS_AS(predict_tree(tree, vec({0, 0})), ForestError);

  params.max_features = MaxFeaturesPolicy::Sqrt;
  CHECK_THROWS_AS(fit_tree(std::vector<FeatureVector>{vec({0}), vec({1})},
                           std::vector<double>{0, 1}, params, nullptr),
                  ForestError);
}

TEST_CASE("greedy induction matches the exhaustive oracle") {
  Rng rng(808);
  TreeParams params;
  params.max_depth = 2;
  for (int trial = 0; trial < 300; ++trial) {
    const TaskKind task = trial % 2 == 0 ? TaskKind::Classification : TaskKind::Regression;
    params.task = task;
    std::vector<FeatureVector> X;
    std::vector<double> y;
    const int n = 2 + static_cast<int>(rng.next_below(11));
    const int d = 1 + static_cast<int>(rng.next_below(4));
    random_dataset(rng, n, d, task, X, y, 1);  // binary features
    const DecisionTree tree = fit_tree(X, y, params);
    REQUIRE(testing::oracle_tree_agrees(tree, X, y, params));
  }
}

TEST_CASE("row order never changes the fitted tree") {
  Rng rng(303);
  TreeParams params;
  params.max_depth = 6;
  for (int trial = 0; trial < 40; ++trial) {
    const TaskKind task = trial % 2 == 0 ? TaskKind::Classification : TaskKind::Regression;
    params.task = task;
    std::vector<FeatureVector> X;
    std::vector<double> y;
    random_dataset(rng, 20, 5, task, X, y, 3);
    const DecisionTree a = fit_tree(X, y, params);

    // Shuffle rows.
    std::vector<std::size_t> perm(X.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[rng.next_below(i)]);
    std::vector<FeatureVector> Xp;
    std::vector<double> yp;
    for (std::size_t i : perm) {
      Xp.push_back(X[i]);
      yp.push_back(y[i]);
    }
    const DecisionTree b = fit_tree(Xp, yp, params);
    REQUIRE(tree_to_json(a) == tree_to_json(b));
  }
}

TEST_CASE("stop conditions are honored") {
  Rng rng(404);
  TreeParams params;
  params.max_depth = 6;
  params.min_samples_split = 2;
  params.min_samples_leaf = 1;
  for (int trial = 0; trial < 60; ++trial) {
    const TaskKind task = trial % 2 == 0 ? TaskKind::Classification : TaskKind::Regression;
    params.task = task;
    std::vector<FeatureVector> X;
    std::vector<double> y;
    random_dataset(rng, 30, 6, task, X, y, 3);
    const DecisionTree tree = fit_tree(X, y, params);
    CHECK(tree.depth <= 6);
    for (const TreeNode& node : tree.nodes) {
      if (node.leaf)
        CHECK(node.n_samples >= params.min_samples_leaf);
      else
        CHECK(node.n_samples >= params.min_samples_split);
    }
  }
}

TEST_CASE("forest with bootstrap off and one tree equals fit_tree") {
  Rng rng(505);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 16, 4, TaskKind::Regression, X, y, 3);
  TreeParams params;
  params.task = TaskKind::Regression;  // All-features policy: no RNG effect
  const RandomForest forest = fit_forest(X, y, 1, params, 11, ForestOptions{false});
  const DecisionTree tree = fit_tree(X, y, params);
  CHECK(tree_to_json(forest.trees[0]) == tree_to_json(tree));
  CHECK(predict_forest(forest, X[0]) == predict_tree(tree, X[0]));
}

TEST_CASE("same seed reproduces the forest") {
  Rng rng(606);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 24, 5, TaskKind::Classification, X, y, 2);
  const TreeParams params = default_params(TaskKind::Classification);
  const RandomForest a = fit_forest(X, y, 10, params, 99);
  const RandomForest b = fit_forest(X, y, 10, params, 99);
  CHECK(forest_to_json(a, "", 5) == forest_to_json(b, "", 5));
  const RandomForest c = fit_forest(X, y, 10, params, 100);
  CHECK(forest_to_json(a, "", 5) != forest_to_json(c, "", 5));
}

TEST_CASE("growing the forest keeps earlier trees identical") {
  Rng rng(707);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 24, 5, TaskKind::Classification, X, y, 2);
  const TreeParams params = default_params(TaskKind::Classification);
  const RandomForest small = fit_forest(X, y, 50, params, 42);
  const RandomForest big = fit_forest(X, y, 51, params, 42);
  for (int k = 0; k < 50; ++k)
    REQUIRE(tree_to_json(small.trees[k]) == tree_to_json(big.trees[k]));
}

TEST_CASE("parallel forest equals serial reference") {
  Rng rng(909);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 30, 6, TaskKind::Classification, X, y, 2);
  const TreeParams params = default_params(TaskKind::Classification);
  const RandomForest parallel = fit_forest(X, y, 16, params, 1);
  const RandomForest serial = fit_forest_serial(X, y, 16, params, 1);
  CHECK(forest_to_json(parallel, "", 6) == forest_to_json(serial, "", 6));
}

TEST_CASE("predict_forest averages tree predictions") {
  Rng rng(111);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 20, 4, TaskKind::Regression, X, y, 3);
  TreeParams params = default_params(TaskKind::Regression);
  RandomForest forest = fit_forest(X, y, 7, params, 5);

  for (int probe = 0; probe < 10; ++probe) {
    FeatureVector x;
    x.dimension = 4;
    for (int f = 0; f < 4; ++f)
      if (rng.next_below(2)) x.counts[f] = static_cast<int>(rng.next_below(4));
    std::vector<double> per_tree;
    for (const DecisionTree& tree : forest.trees) per_tree.push_back(predict_tree(tree, x));
    CHECK(predict_forest(forest, x) == ensemble_mean(per_tree));

    // Tree order must not matter.
    RandomForest shuffled = forest;
    std::reverse(shuffled.trees.begin(), shuffled.trees.end());
    CHECK(predict_forest(shuffled, x) == predict_forest(forest, x));
  }

  // Two hand-built stumps averaging 0 and 1.
  const std::vector<FeatureVector> Xs = {vec({0}), vec({1})};
  TreeParams stump;
  stump.task = TaskKind::Regression;
  RandomForest pair;
  pair.trees.push_back(fit_tree(Xs, std::vector<double>{0.0, 0.0}, stump));
  pair.trees.push_back(fit_tree(Xs, std::vector<double>{1.0, 1.0}, stump));
  CHECK(predict_forest(pair, vec({0})) == 0.5);
}

TEST_CASE("forest serialization round trip and mismatch rejection") {
  Rng rng(222);
  std::vector<FeatureVector> X;
  std::vector<double> y;
  random_dataset(rng, 20, 4, TaskKind::Classification, X, y, 2);
  const TreeParams params = default_params(TaskKind::Classification);
  const RandomForest forest = fit_forest(X, y, 5, params, 77);

  const std::string json = forest_to_json(forest, "lib-v1", 4);
  const RandomForest loaded = forest_from_json(json);
  CHECK(forest_to_json(loaded, "lib-v1", 4) == json);
  for (int probe = 0; probe < 5; ++probe) CHECK(predict_forest(loaded, X[probe]) == predict_forest(forest, X[probe]));

  auto lib_ok = FunctionalGroupLibrary::from_entries(
      {{"a", "C"}, {"b", "O"}, {"c", "N"}, {"d", "S"}}, "lib-v1");
  CHECK_NOTHROW(forest_from_json(json, &lib_ok));

  auto lib_wrong_size = FunctionalGroupLibrary::from_entries({{"a", "C"}}, "lib-v1");
  CHECK_THROWS_AS(forest_from_json(json, &lib_wrong_size), ForestError);

  auto lib_wrong_version = FunctionalGroupLibrary::from_entries(
      {{"a", "C"}, {"b", "O"}, {"c", "N"}, {"d", "S"}}, "lib-v2");
  CHECK_THROWS_AS(forest_from_json(json, &lib_wrong_version), ForestError);

  CHECK_THROWS_AS(forest_from_json("{}"), ForestError);
  CHECK_THROWS_AS(forest_from_json("not json"), ForestError);
}

TEST_CASE("classification leaves store counts and fractions") {
  const std::vector<FeatureVector> X = {vec({0}), vec({0}), vec({0}), vec({1})};
  const std::vector<double> y = {0, 0, 1, 1};
  TreeParams params;
  params.task = TaskKind::Classification;
  const DecisionTree tree = fit_tree(X, y, params);
  REQUIRE(tree.nodes.size() == 3);
  const TreeNode& left = tree.nodes[tree.nodes[0].left];
  CHECK(left.leaf);
  CHECK(left.n_negative == 2);
  CHECK(left.n_positive == 1);
  CHECK(left.value == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}
