#include "treekd/forest.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "treekd/numformat.hpp"

namespace treekd {

namespace {

struct NodeStats {
  long n = 0;
  long n_positive = 0;  // classification
  double sum = 0.0;     // regression
  double sum_sq = 0.0;
};

double impurity(const NodeStats& s, TaskKind task) {
  const double n = static_cast<double>(s.n);
  if (task == TaskKind::Classification) {
    const double p = static_cast<double>(s.n_positive) / n;
    return 2.0 * p * (1.0 - p);
  }
  const double mean = s.sum / n;
  return s.sum_sq / n - mean * mean;
}

double leaf_value(const NodeStats& s, TaskKind task) {
  if (task == TaskKind::Classification)
    return static_cast<double>(s.n_positive) / static_cast<double>(s.n);
  return s.sum / static_cast<double>(s.n);
}

struct BestSplit {
  bool found = false;
  double decrease = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const FeatureVector> X, std::span<const double> y,
              const TreeParams& params, Rng* rng)
      : X_(X), y_(y), params_(params), rng_(rng) {}

  DecisionTree run() {
    if (X_.empty()) throw ForestError(ForestError::Kind::EmptyInput, "no training samples");
    if (X_.size() != y_.size())
      throw ForestError(ForestError::Kind::DimensionMismatch, "X and y lengths differ");
    dimension_ = X_[0].dimension;
    for (const FeatureVector& v : X_)
      if (v.dimension != dimension_)
        throw ForestError(ForestError::Kind::DimensionMismatch,
                          "inconsistent feature dimensions");
    if (params_.max_features == MaxFeaturesPolicy::Sqrt && rng_ == nullptr)
      throw ForestError(ForestError::Kind::BadParams,
                        "Sqrt feature subsampling needs an RNG stream");

    tree_.task = params_.task;
    tree_.dimension = dimension_;
    std::vector<int> all(X_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    build(all, 0);
    tree_.canonicalize();
    return std::move(tree_);
  }

 private:
  NodeStats stats_of(const std::vector<int>& samples) const {
    NodeStats s;
    s.n = static_cast<long>(samples.size());
    for (int i : samples) {
      if (params_.task == TaskKind::Classification) {
        if (y_[i] != 0.0) ++s.n_positive;
      } else {
        s.sum += y_[i];
        s.sum_sq += y_[i] * y_[i];
      }
    }
    return s;
  }

  bool pure(const std::vector<int>& samples) const {
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (y_[samples[i]] != y_[samples[0]]) return false;
    return true;
  }

  std::vector<int> candidate_features() {
    std::vector<int> features(dimension_);
    for (int f = 0; f < dimension_; ++f) features[f] = f;
    if (params_.max_features == MaxFeaturesPolicy::All) return features;
    const int k = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(dimension_))));
    if (k >= dimension_) return features;
    // Partial Fisher-Yates driven by the tree's stream, then sorted so the
    // lowest-feature-index tie-break means the same thing as with All.
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng_->next_below(dimension_ - i));
      std::swap(features[i], features[j]);
    }
    features.resize(k);
    std::sort(features.begin(), features.end());
    return features;
  }

  BestSplit find_best_split(const std::vector<int>& samples, const NodeStats& parent) {
    BestSplit best;
    const double parent_impurity = impurity(parent, params_.task);
    const double n = static_cast<double>(parent.n);

    for (int f : candidate_features()) {
      // Sort by (value, label): identical sample multisets then accumulate in
      // an identical order, which keeps induction invariant to row order.
      std::vector<std::pair<double, double>> col;
      col.reserve(samples.size());
      for (int i : samples) col.emplace_back(X_[i].at(f), y_[i]);
      std::sort(col.begin(), col.end());
      if (col.front().first == col.back().first) continue;  // all values equal

      NodeStats left;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        left.n += 1;
        if (params_.task == TaskKind::Classification) {
          if (col[i].second != 0.0) ++left.n_positive;
        } else {
          left.sum += col[i].second;
          left.sum_sq += col[i].second * col[i].second;
        }
        if (col[i].first == col[i + 1].first) continue;  // not a value boundary
        NodeStats right;
        right.n = parent.n - left.n;
        right.n_positive = parent.n_positive - left.n_positive;
        right.sum = parent.sum - left.sum;
        right.sum_sq = parent.sum_sq - left.sum_sq;
        if (left.n < params_.min_samples_leaf || right.n < params_.min_samples_leaf) continue;

        const double decrease = parent_impurity -
                                (static_cast<double>(left.n) / n) * impurity(left, params_.task) -
                                (static_cast<double>(right.n) / n) * impurity(right, params_.task);
        const double threshold = (col[i].first + col[i + 1].first) / 2.0;
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

  int make_leaf(const NodeStats& stats) {
    TreeNode node;
    node.leaf = true;
    node.value = leaf_value(stats, params_.task);
    node.n_samples = stats.n;
    if (params_.task == TaskKind::Classification) {
      node.n_positive = stats.n_positive;
      node.n_negative = stats.n - stats.n_positive;
    }
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  int build(const std::vector<int>& samples, int depth) {
    tree_.depth = std::max(tree_.depth, depth);
    const NodeStats stats = stats_of(samples);

    if (depth >= params_.max_depth || stats.n < params_.min_samples_split || pure(samples))
      return make_leaf(stats);

    const BestSplit best = find_best_split(samples, stats);
    if (!best.found) return make_leaf(stats);

    const int index = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.n_samples = stats.n;
    tree_.nodes.push_back(node);

    std::vector<int> left, right;
    for (int i : samples)
      (X_[i].at(best.feature) <= best.threshold ? left : right).push_back(i);
    tree_.nodes[index].left = build(left, depth + 1);
    tree_.nodes[index].right = build(right, depth + 1);
    return index;
  }

  std::span<const FeatureVector> X_;
  std::span<const double> y_;
  TreeParams params_;
  Rng* rng_;
  int dimension_ = 0;
  DecisionTree tree_;
};

nlohmann::json params_to_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_split", p.min_samples_split},
          {"min_samples_leaf", p.min_samples_leaf},
          {"max_features", p.max_features == MaxFeaturesPolicy::Sqrt ? "sqrt" : "all"},
          {"task", to_string(p.task)}};
}

TreeParams params_from_json(const nlohmann::json& j) {
  TreeParams p;
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.max_features = j.at("max_features").get<std::string>() == "sqrt" ? MaxFeaturesPolicy::Sqrt
                                                                     : MaxFeaturesPolicy::All;
  p.task = j.at("task").get<std::string>() == "regression" ? TaskKind::Regression
                                                           : TaskKind::Classification;
  return p;
}

nlohmann::json tree_to_json_obj(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.leaf) {
      nlohmann::json j = {{"value", n.value}, {"n_samples", n.n_samples}};
      if (tree.task == TaskKind::Classification) {
        j["n_negative"] = n.n_negative;
        j["n_positive"] = n.n_positive;
      }
      nodes.push_back(std::move(j));
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"n_samples", n.n_samples}});
    }
  }
  return {{"nodes", std::move(nodes)}, {"depth", tree.depth}, {"task", to_string(tree.task)},
          {"dimension", tree.dimension}};
}

DecisionTree tree_from_json_obj(const nlohmann::json& j) {
  DecisionTree tree;
  tree.depth = j.at("depth").get<int>();
  tree.task = j.at("task").get<std::string>() == "regression" ? TaskKind::Regression
                                                              : TaskKind::Classification;
  tree.dimension = j.at("dimension").get<int>();
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    if (nj.contains("feature")) {
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
    } else {
      n.leaf = true;
      n.value = nj.at("value").get<double>();
      n.n_negative = nj.value("n_negative", 0L);
      n.n_positive = nj.value("n_positive", 0L);
    }
    n.n_samples = nj.value("n_samples", 0L);
    tree.nodes.push_back(n);
  }
  if (tree.nodes.empty())
    throw ForestError(ForestError::Kind::ModelFormat, "tree has no nodes");
  return tree;
}

}  // namespace

TreeParams default_params(TaskKind task) {
  TreeParams p;
  p.task = task;
  p.max_features =
      task == TaskKind::Classification ? MaxFeaturesPolicy::Sqrt : MaxFeaturesPolicy::All;
  return p;
}

int DecisionTree::internal_count() const {
  int c = 0;
  for (const TreeNode& n : nodes) c += n.leaf ? 0 : 1;
  return c;
}

int DecisionTree::leaf_count() const {
  return static_cast<int>(nodes.size()) - internal_count();
}

void DecisionTree::canonicalize() {
  for (TreeNode& n : nodes) {
    if (n.leaf)
      n.value = round_sig4(n.value);
    else
      n.threshold = round_fixed4(n.threshold);
  }
}

DecisionTree fit_tree(std::span<const FeatureVector> X, std::span<const double> y,
                      const TreeParams& params, Rng* rng) {
  return TreeBuilder(X, y, params, rng).run();
}

double predict_tree(const DecisionTree& tree, const FeatureVector& x) {
  if (x.dimension != tree.dimension)
    throw ForestError(ForestError::Kind::DimensionMismatch,
                      "feature vector dimension " + std::to_string(x.dimension) +
                          " does not match tree dimension " + std::to_string(tree.dimension));
  int at = 0;
  while (!tree.nodes[at].leaf) {
    const TreeNode& n = tree.nodes[at];
    at = x.at(n.feature) <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[at].value;
}

namespace {

DecisionTree fit_forest_member(std::span<const FeatureVector> X, std::span<const double> y,
                               const TreeParams& params, std::uint64_t seed, int k,
                               bool bootstrap) {
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(k)));
  if (!bootstrap) return fit_tree(X, y, params, &rng);

  const std::size_t n = X.size();
  std::vector<FeatureVector> Xb(n);
  std::vector<double> yb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = rng.next_below(n);
    Xb[i] = X[j];
    yb[i] = y[j];
  }
  return fit_tree(Xb, yb, params, &rng);
}

}  // namespace

RandomForest fit_forest_serial(std::span<const FeatureVector> X, std::span<const double> y,
                               int n_trees, const TreeParams& params, std::uint64_t seed,
                               ForestOptions options) {
  if (n_trees < 1) throw ForestError(ForestError::Kind::BadParams, "forest needs at least 1 tree");
  RandomForest forest;
  forest.seed = seed;
  forest.params = params;
  forest.trees.resize(n_trees);
  for (int k = 0; k < n_trees; ++k)
    forest.trees[k] = fit_forest_member(X, y, params, seed, k, options.bootstrap);
  return forest;
}

RandomForest fit_forest(std::span<const FeatureVector> X, std::span<const double> y, int n_trees,
                        const TreeParams& params, std::uint64_t seed, ForestOptions options) {
  if (n_trees < 1) throw ForestError(ForestError::Kind::BadParams, "forest needs at least 1 tree");
  RandomForest forest;
  forest.seed = seed;
  forest.params = params;
  forest.trees.resize(n_trees);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_trees; ++k)
    forest.trees[k] = fit_forest_member(X, y, params, seed, k, options.bootstrap);
  return forest;
}

double ensemble_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double predict_forest(const RandomForest& forest, const FeatureVector& x) {
  std::vector<double> values;
  values.reserve(forest.trees.size());
  for (const DecisionTree& tree : forest.trees) values.push_back(predict_tree(tree, x));
  return ensemble_mean(std::move(values));
}

std::string tree_to_json(const DecisionTree& tree) { return tree_to_json_obj(tree).dump(2); }

DecisionTree tree_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ForestError(ForestError::Kind::ModelFormat, std::string("bad tree JSON: ") + e.what());
  }
  return tree_from_json_obj(j);
}

std::string forest_to_json(const RandomForest& forest, const std::string& library_version,
                           int dimension) {
  nlohmann::json j;
  j["format"] = "treekd-forest-v1";
  j["seed"] = forest.seed;
  j["params"] = params_to_json(forest.params);
  j["dimension"] = dimension;
  j["library_version"] = library_version;
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : forest.trees) trees.push_back(tree_to_json_obj(tree));
  j["trees"] = std::move(trees);
  return j.dump(2);
}

RandomForest forest_from_json(const std::string& text,
                              const FunctionalGroupLibrary* expected_library) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ForestError(ForestError::Kind::ModelFormat, std::string("bad forest JSON: ") + e.what());
  }
  if (j.value("format", "") != std::string("treekd-forest-v1"))
    throw ForestError(ForestError::Kind::ModelFormat, "unknown forest format tag");

  RandomForest forest;
  forest.seed = j.at("seed").get<std::uint64_t>();
  forest.params = params_from_json(j.at("params"));
  for (const auto& tj : j.at("trees")) forest.trees.push_back(tree_from_json_obj(tj));
  if (forest.trees.empty())
    throw ForestError(ForestError::Kind::ModelFormat, "forest has no trees");

  if (expected_library != nullptr) {
    const int dimension = j.at("dimension").get<int>();
    const std::string version = j.value("library_version", "");
    if (dimension != expected_library->size())
      throw ForestError(ForestError::Kind::ModelFormat,
                        "model dimension " + std::to_string(dimension) +
                            " does not match library size " +
                            std::to_string(expected_library->size()));
    if (version != expected_library->version_tag)
      throw ForestError(ForestError::Kind::ModelFormat,
                        "model library version '" + version + "' does not match '" +
                            expected_library->version_tag + "'");
  }
  return forest;
}

}  // namespace treekd
