#include "treekd/verbalizer.hpp"

#include <bit>
#include <cctype>

#include "treekd/numformat.hpp"
#include "treekd/rng.hpp"

namespace treekd {

namespace {

std::uint64_t tree_fingerprint_of(const DecisionTree& tree) {
  std::uint64_t h = 0x6b5c4d3e2f1a0987ull;
  for (const TreeNode& n : tree.nodes) {
    h = hash_combine(h, n.leaf ? 1 : 0);
    h = hash_combine(h, static_cast<std::uint64_t>(n.feature + 1));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(n.threshold));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(n.value));
  }
  return h;
}

std::string leaf_text(const TreeNode& node, TaskKind task) {
  if (task == TaskKind::Regression) return format_sig4(node.value);
  const char* label = node.value > 0.5 ? "positive" : "negative";
  return std::string(label) + " (p=" + format_sig4(node.value) + ")";
}

void emit(DecisionTree& tree, int at, int depth, const FunctionalGroupLibrary& library,
          std::vector<std::string>& lines) {
  const std::string tabs(depth, '\t');
  TreeNode& node = tree.nodes[at];
  if (node.leaf) {
    node.value = round_sig4(node.value);
    lines.push_back(tabs + "predict " + leaf_text(node, tree.task));
    return;
  }
  if (node.feature < 0 || node.feature >= library.size())
    throw RuleError(RuleError::Kind::FeatureOutOfRange,
                    "feature index " + std::to_string(node.feature) +
                        " outside library of size " + std::to_string(library.size()));
  node.threshold = round_fixed4(node.threshold);
  lines.push_back(tabs + "if count of \"" + library.entries[node.feature].name +
                  "\" <= " + format_fixed4(node.threshold) + ":");
  emit(tree, node.left, depth + 1, library, lines);
  lines.push_back(tabs + "else:");
  emit(tree, node.right, depth + 1, library, lines);
}

class RuleParser {
 public:
  explicit RuleParser(const std::vector<std::string>& lines) : lines_(lines) {}

  ExecutableRule run() {
    if (lines_.empty()) throw RuleError(RuleError::Kind::GrammarError, "empty rule text");
    parse_node(0);
    if (next_ != lines_.size())
      throw RuleError(RuleError::Kind::GrammarError,
                      "trailing lines after rule (line " + std::to_string(next_ + 1) + ")");
    return std::move(rule_);
  }

 private:
  int depth_of(const std::string& line, std::size_t lineno) const {
    std::size_t tabs = 0;
    while (tabs < line.size() && line[tabs] == '\t') ++tabs;
    if (tabs < line.size() && std::isspace(static_cast<unsigned char>(line[tabs])))
      throw RuleError(RuleError::Kind::GrammarError,
                      "non-tab leading whitespace on line " + std::to_string(lineno + 1));
    return static_cast<int>(tabs);
  }

  const std::string& expect_line(int depth) {
    if (next_ >= lines_.size())
      throw RuleError(RuleError::Kind::GrammarError, "rule text ends mid-branch");
    const std::string& line = lines_[next_];
    const int actual = depth_of(line, next_);
    if (actual > depth)
      throw RuleError(RuleError::Kind::IndentError,
                      "line " + std::to_string(next_ + 1) + " indented " +
                          std::to_string(actual) + " levels, expected " + std::to_string(depth));
    if (actual < depth)
      throw RuleError(RuleError::Kind::GrammarError,
                      "line " + std::to_string(next_ + 1) + " under-indented");
    return line;
  }

  int parse_node(int depth) {
    const std::string& line = expect_line(depth);
    const std::string body = line.substr(depth);
    ++next_;

    const int index = static_cast<int>(rule_.nodes.size());
    rule_.nodes.emplace_back();

    if (body.rfind("predict ", 0) == 0) {
      parse_leaf(body.substr(8), index);
      return index;
    }
    if (body.rfind("if count of \"", 0) == 0) {
      const std::string rest = body.substr(13);
      const auto quote = rest.find('"');
      if (quote == std::string::npos)
        throw RuleError(RuleError::Kind::GrammarError, "unterminated FG name");
      const std::string after = rest.substr(quote + 1);
      const std::string lead = " <= ";
      if (after.compare(0, lead.size(), lead) != 0 || after.back() != ':')
        throw RuleError(RuleError::Kind::GrammarError, "malformed if-line '" + body + "'");
      const std::string number = after.substr(lead.size(), after.size() - lead.size() - 1);
      rule_.nodes[index].fg_name = rest.substr(0, quote);
      rule_.nodes[index].threshold = parse_strict(number);

      const int left = parse_node(depth + 1);
      const std::string& else_line = expect_line(depth);
      if (else_line.substr(depth) != "else:")
        throw RuleError(RuleError::Kind::GrammarError, "expected 'else:' at line " +
                                                           std::to_string(next_ + 1));
      ++next_;
      const int right = parse_node(depth + 1);
      rule_.nodes[index].left = left;
      rule_.nodes[index].right = right;
      return index;
    }
    throw RuleError(RuleError::Kind::GrammarError, "unrecognized line '" + body + "'");
  }

  void parse_leaf(const std::string& text, int index) {
    RuleNode& node = rule_.nodes[index];
    node.leaf = true;
    for (const char* label : {"positive (p=", "negative (p="}) {
      const std::size_t len = std::char_traits<char>::length(label);
      if (text.compare(0, len, label) == 0 && !text.empty() && text.back() == ')') {
        node.classification_leaf = true;
        node.value = parse_strict(text.substr(len, text.size() - len - 1));
        return;
      }
    }
    node.value = parse_strict(text);
  }

  double parse_strict(const std::string& s) const {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &consumed);
    } catch (const std::exception&) {
      throw RuleError(RuleError::Kind::GrammarError, "bad number '" + s + "'");
    }
    if (consumed != s.size())
      throw RuleError(RuleError::Kind::GrammarError, "bad number '" + s + "'");
    return v;
  }

  const std::vector<std::string>& lines_;
  std::size_t next_ = 0;
  ExecutableRule rule_;
};

}  // namespace

std::string RuleText::str() const {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

RuleText verbalize_rule(DecisionTree& tree, const FunctionalGroupLibrary& library) {
  RuleText text;
  emit(tree, 0, 0, library, text.lines);
  text.tree_fingerprint = tree_fingerprint_of(tree);
  return text;
}

ExecutableRule parse_rule(const std::vector<std::string>& lines) {
  return RuleParser(lines).run();
}

ExecutableRule parse_rule(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return parse_rule(lines);
}

const RuleNode& execute_rule_leaf(const ExecutableRule& rule, const FeatureVector& vec,
                                  const FunctionalGroupLibrary& library) {
  int at = 0;
  while (!rule.nodes[at].leaf) {
    const RuleNode& node = rule.nodes[at];
    const int feature = library.index_of(node.fg_name);
    if (feature < 0)
      throw RuleError(RuleError::Kind::UnknownFGName,
                      "FG name '" + node.fg_name + "' not in library");
    at = vec.at(feature) <= node.threshold ? node.left : node.right;
  }
  return rule.nodes[at];
}

double execute_rule(const ExecutableRule& rule, const FeatureVector& vec,
                    const FunctionalGroupLibrary& library) {
  return execute_rule_leaf(rule, vec, library).value;
}

}  // namespace treekd
