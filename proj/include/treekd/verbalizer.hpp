#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treekd/errors.hpp"
#include "treekd/forest.hpp"
#include "treekd/pattern.hpp"

namespace treekd {

class RuleError : public Error {
 public:
  enum class Kind { FeatureOutOfRange, IndentError, GrammarError, UnknownFGName };
  RuleError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

// A verbalized predictive rule. Indentation uses tab characters only; the
// tab depth of a line equals the depth of the node it renders.
struct RuleText {
  std::vector<std::string> lines;
  std::uint64_t tree_fingerprint = 0;

  // Lines joined with LF, no trailing newline. Bit-exact: tabs are literal.
  std::string str() const;
};

// Renders a tree depth-first, pre-order:
//   internal node:  <tabs> if count of "<FG name>" <= <threshold>:
//                   ...left subtree, one tab deeper...
//                   <tabs> else:
//                   ...right subtree, one tab deeper...
//   leaf:           <tabs> predict <value>
// Classification leaves render `positive (p=<frac>)` or `negative (p=<frac>)`
// by majority; regression leaves render the mean at 4 significant digits.
// Thresholds print with up to 4 decimals, trailing zeros trimmed, and the
// printed number is stored back into the tree so text and model can never
// disagree on a boundary.
RuleText verbalize_rule(DecisionTree& tree, const FunctionalGroupLibrary& library);

// Executable form of a rule, keyed by FG name. Names resolve to feature
// indices only at execution time.
struct RuleNode {
  bool leaf = false;
  std::string fg_name;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  bool classification_leaf = false;
};

struct ExecutableRule {
  std::vector<RuleNode> nodes;  // node 0 is the root
};

ExecutableRule parse_rule(const std::vector<std::string>& lines);
ExecutableRule parse_rule(const std::string& text);

// Same descent semantics as predict_tree (<= goes left).
double execute_rule(const ExecutableRule& rule, const FeatureVector& vec,
                    const FunctionalGroupLibrary& library);

// Descends and reports the landed leaf (used by the stub predictor to render
// the answer in the leaf's own format).
const RuleNode& execute_rule_leaf(const ExecutableRule& rule, const FeatureVector& vec,
                                  const FunctionalGroupLibrary& library);

}  // namespace treekd
