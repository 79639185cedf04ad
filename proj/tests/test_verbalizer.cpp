#include <doctest.h>

#include "treekd/forest.hpp"
#include "treekd/numformat.hpp"
#include "treekd/verbalizer.hpp"

using namespace treekd;

namespace {

FunctionalGroupLibrary small_library() {
  return FunctionalGroupLibrary::from_entries(
      {{"hydroxyl", "[OX2H1]"}, {"carbonyl", "C=O"}, {"nitro", "[N+](=O)[O-]"},
       {"chloro", "Cl"}, {"amine", "[NX3H2]"}});
}

FeatureVector vec(std::initializer_list<std::pair<int, int>> counts, int dimension = 5) {
  FeatureVector v;
  v.dimension = dimension;
  for (const auto& [index, count] : counts)
    if (count != 0) v.counts[index] = count;
  return v;
}

// Uniformly random tree over the library's features; thresholds and leaf
// values land off the 4-digit grids so round-back genuinely fires.
DecisionTree random_tree(Rng& rng, int dimension, int max_depth, TaskKind task) {
  DecisionTree tree;
  tree.task = task;
  tree.dimension = dimension;

  auto rec = [&](auto&& self, int depth) -> int {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.depth = std::max(tree.depth, depth);
    const bool leaf = depth >= max_depth || rng.next_below(3) == 0;
    if (leaf) {
      tree.nodes[index].leaf = true;
      const double raw = static_cast<double>(rng.next_below(1000000)) / 30011.0;
      tree.nodes[index].value =
          task == TaskKind::Classification ? raw / 34.0 : raw - 10.0;
      return index;
    }
    tree.nodes[index].feature = static_cast<int>(rng.next_below(dimension));
    tree.nodes[index].threshold = static_cast<double>(rng.next_below(300000)) / 77777.0;
    const int left = self(self, depth + 1);
    const int right = self(self, depth + 1);
    tree.nodes[index].left = left;
    tree.nodes[index].right = right;
    return index;
  };
  rec(rec, 0);
  return tree;
}

FeatureVector random_vector(Rng& rng, int dimension) {
  FeatureVector v;
  v.dimension = dimension;
  for (int f = 0; f < dimension; ++f)
    if (rng.next_below(2)) v.counts[f] = static_cast<int>(rng.next_below(5));
  return v;
}

}  // namespace

TEST_CASE("single-leaf regression rule") {
  const auto library = small_library();
  DecisionTree tree;
  tree.task = TaskKind::Regression;
  tree.dimension = 5;
  TreeNode leaf;
  leaf.leaf = true;
  leaf.value = 3.0;
  tree.nodes.push_back(leaf);

  const RuleText text = verbalize_rule(tree, library);
  REQUIRE(text.lines.size() == 1);
  CHECK(text.lines[0] == "predict 3");
}

TEST_CASE("depth-1 classification rule layout") {
  const auto library = small_library();
  const std::vector<FeatureVector> X = {vec({{0, 0}}), vec({{0, 0}}), vec({{0, 1}}),
                                        vec({{0, 1}})};
  const std::vector<double> y = {0, 0, 1, 1};
  TreeParams params;
  params.task = TaskKind::Classification;
  DecisionTree tree = fit_tree(X, y, params);

  const RuleText text = verbalize_rule(tree, library);
  REQUIRE(text.lines.size() == 4);
  CHECK(text.lines[0] == "if count of \"hydroxyl\" <= 0.5:");
  CHECK(text.lines[1] == "\tpredict negative (p=0)");
  CHECK(text.lines[2] == "else:");
  CHECK(text.lines[3] == "\tpredict positive (p=1)");

  // Tab depth equals node depth; no other leading whitespace.
  for (const std::string& line : text.lines) {
    std::size_t tabs = 0;
    while (tabs < line.size() && line[tabs] == '\t') ++tabs;
    CHECK(tabs <= 1);
    CHECK_FALSE(line[tabs] == ' ');
  }
}

TEST_CASE("line count is two internals plus leaves") {
  Rng rng(42);
  const auto library = small_library();
  for (int trial = 0; trial < 50; ++trial) {
    DecisionTree tree = random_tree(rng, 5, 4, TaskKind::Regression);
    const RuleText text = verbalize_rule(tree, library);
    CHECK(static_cast<int>(text.lines.size()) ==
          2 * tree.internal_count() + tree.leaf_count());
  }
}

TEST_CASE("feature outside the library is rejected") {
  const auto library = small_library();
  DecisionTree tree;
  tree.task = TaskKind::Regression;
  tree.dimension = 9;
  TreeNode node;
  node.feature = 7;
  node.threshold = 1.0;
  node.left = 1;
  node.right = 2;
  tree.nodes.push_back(node);
  TreeNode leaf;
  leaf.leaf = true;
  tree.nodes.push_back(leaf);
  tree.nodes.push_back(leaf);
  CHECK_THROWS_AS(verbalize_rule(tree, library), RuleError);
}

TEST_CASE("parse_rule accepts every verbalized tree") {
  Rng rng(7);
  const auto library = small_library();
  for (int trial = 0; trial < 100; ++trial) {
    DecisionTree tree = random_tree(rng, 5, 5, trial % 2 == 0 ? TaskKind::Classification
                                                              : TaskKind::Regression);
    const RuleText text = verbalize_rule(tree, library);
    CHECK_NOTHROW(parse_rule(text.lines));
  }
}

TEST_CASE("parse errors carry kinds") {
  auto kind_of = [](const std::vector<std::string>& lines) {
    try {
      parse_rule(lines);
    } catch (const RuleError& e) {
      return e.kind;
    }
    return RuleError::Kind::FeatureOutOfRange;
  };
  // Two levels deeper than the parent.
  CHECK(kind_of({"if count of \"hydroxyl\" <= 0.5:", "\t\t\tpredict 1", "else:", "\tpredict 2"}) ==
        RuleError::Kind::IndentError);
  CHECK(kind_of({"banana"}) == RuleError::Kind::GrammarError);
  CHECK(kind_of({"predict 1", "predict 2"}) == RuleError::Kind::GrammarError);
  CHECK(kind_of({"if count of \"hydroxyl\" <= 0.5:", "\tpredict 1"}) ==
        RuleError::Kind::GrammarError);  // missing else
  CHECK(kind_of({"if count of \"hydroxyl\" <= abc:", "\tpredict 1", "else:", "\tpredict 2"}) ==
        RuleError::Kind::GrammarError);
  CHECK(kind_of({"  predict 1"}) == RuleError::Kind::GrammarError);  // space indent
  CHECK(kind_of({"predict maybe"}) == RuleError::Kind::GrammarError);
}

TEST_CASE("hand-written rule executes as written") {
  const auto library = small_library();
  const ExecutableRule rule = parse_rule(std::vector<std::string>{
      "if count of \"nitro\" <= 0.5:",
      "\tpredict negative (p=0.25)",
      "else:",
      "\tpredict positive (p=0.875)",
  });
  CHECK(execute_rule(rule, vec({{2, 0}}), library) == 0.25);
  CHECK(execute_rule(rule, vec({{2, 1}}), library) == 0.875);
  CHECK(execute_rule(rule, vec({{2, 3}}), library) == 0.875);

  // Sparse zero goes left on a 0.5 threshold.
  const ExecutableRule zero = parse_rule(std::vector<std::string>{
      "if count of \"chloro\" <= 0.5:", "\tpredict 1", "else:", "\tpredict 2"});
  CHECK(execute_rule(zero, vec({}), library) == 1.0);

  const ExecutableRule unknown = parse_rule(std::vector<std::string>{
      "if count of \"benzene\" <= 0.5:", "\tpredict 1", "else:", "\tpredict 2"});
  CHECK_THROWS_AS(execute_rule(unknown, vec({}), library), RuleError);
}

TEST_CASE("round trip equals predict_tree bit for bit") {
  Rng rng(2025);
  const auto library = small_library();
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    DecisionTree tree = random_tree(rng, 5, 6, trial % 2 == 0 ? TaskKind::Classification
                                                              : TaskKind::Regression);
    const RuleText text = verbalize_rule(tree, library);
    const ExecutableRule rule = parse_rule(text.str());
    for (int probe = 0; probe < 50; ++probe) {
      const FeatureVector x = random_vector(rng, 5);
      REQUIRE(execute_rule(rule, x, library) == predict_tree(tree, x));
      ++checked;
    }
  }
  CHECK(checked == 3000);
}

TEST_CASE("fitted trees round trip too") {
  Rng rng(31415);
  const auto library = small_library();
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FeatureVector> X;
    std::vector<double> y;
    for (int i = 0; i < 24; ++i) {
      X.push_back(random_vector(rng, 5));
      y.push_back(trial % 2 == 0 ? static_cast<double>(rng.next_below(2))
                                 : static_cast<double>(rng.next_below(100)) / 7.0);
    }
    TreeParams params;
    params.task = trial % 2 == 0 ? TaskKind::Classification : TaskKind::Regression;
    DecisionTree tree = fit_tree(X, y, params);
    const RuleText text = verbalize_rule(tree, library);
    const ExecutableRule rule = parse_rule(text.lines);
    for (int probe = 0; probe < 40; ++probe) {
      const FeatureVector x = random_vector(rng, 5);
      REQUIRE(execute_rule(rule, x, library) == predict_tree(tree, x));
    }
  }
}

TEST_CASE("threshold formatting trims and rounds back") {
  CHECK(format_fixed4(0.5) == "0.5");
  CHECK(format_fixed4(3.0) == "3");
  CHECK(format_fixed4(1.23456789) == "1.2346");
  CHECK(format_fixed4(-0.00001) == "0");
  CHECK(format_sig4(3.0) == "3");
  CHECK(format_sig4(1.0 / 3.0) == "0.3333");
  CHECK(format_sig4(123456.0) == "1.235e+05");
  // Stability: format(parse(format(x))) == format(x).
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double x = (static_cast<double>(rng.next_below(1u << 30)) / 9973.0) - 50000.0;
    CHECK(format_fixed4(round_fixed4(x)) == format_fixed4(x));
    CHECK(format_sig4(round_sig4(x)) == format_sig4(x));
  }
}

TEST_CASE("rule text serialization keeps tabs intact") {
  Rng rng(99);
  const auto library = small_library();
  DecisionTree tree = random_tree(rng, 5, 3, TaskKind::Regression);
  const RuleText text = verbalize_rule(tree, library);
  const std::string s = text.str();
  CHECK(s.find('\t') != std::string::npos);
  CHECK(s.find("    ") == std::string::npos);
  const ExecutableRule a = parse_rule(s);
  const ExecutableRule b = parse_rule(text.lines);
  CHECK(a.nodes.size() == b.nodes.size());
}
