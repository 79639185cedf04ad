#include "treekd/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>

namespace treekd {

namespace {

[[noreturn]] void unsupported(const std::string& token) {
  throw SmartsError(SmartsError::Kind::UnsupportedPrimitive,
                    "unsupported SMARTS primitive '" + token + "'");
}

[[noreturn]] void malformed(const std::string& msg) {
  throw SmartsError(SmartsError::Kind::MalformedExpression, msg);
}

using ExprPtr = std::unique_ptr<AtomExpr>;

ExprPtr make_leaf(AtomExpr::Op op, std::string symbol = "", int arg = 0) {
  auto e = std::make_unique<AtomExpr>();
  e->op = op;
  e->symbol = std::move(symbol);
  e->arg = arg;
  return e;
}

ExprPtr make_node(AtomExpr::Op op, ExprPtr lhs, ExprPtr rhs = nullptr) {
  auto e = std::make_unique<AtomExpr>();
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

// Recursive-descent parser for bracketed atom expressions.
// Precedence: ! > & (and implicit adjacency) > , > ;
class AtomExprParser {
 public:
  explicit AtomExprParser(std::string_view text) : text_(text) {}

  ExprPtr parse() {
    ExprPtr e = parse_low_and();
    if (pos_ != text_.size())
      malformed("trailing characters in atom expression '" + std::string(text_) + "'");
    return e;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  ExprPtr parse_low_and() {
    ExprPtr e = parse_or();
    while (peek() == ';') {
      ++pos_;
      e = make_node(AtomExpr::Op::And, std::move(e), parse_or());
    }
    return e;
  }

  ExprPtr parse_or() {
    ExprPtr e = parse_high_and();
    while (peek() == ',') {
      ++pos_;
      e = make_node(AtomExpr::Op::Or, std::move(e), parse_high_and());
    }
    return e;
  }

  ExprPtr parse_high_and() {
    ExprPtr e = parse_unary();
    while (true) {
      const char c = peek();
      if (c == '&') {
        ++pos_;
        e = make_node(AtomExpr::Op::And, std::move(e), parse_unary());
      } else if (c != '\0' && c != ';' && c != ',') {
        // Adjacent primitives are an implicit high-and ([OX2H1]).
        e = make_node(AtomExpr::Op::And, std::move(e), parse_unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_unary() {
    if (peek() == '!') {
      ++pos_;
      return make_node(AtomExpr::Op::Not, parse_unary());
    }
    return parse_primitive();
  }

  int parse_digits(int fallback) {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) return fallback;
    int v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (text_[pos_++] - '0');
    return v;
  }

  ExprPtr parse_primitive() {
    const char c = peek();
    // Two-letter element symbols win over single-char primitives ([As] is
    // arsenic, not aliphatic-any + aromatic sulfur), per the usual
    // longest-match rule.
    if (std::isupper(static_cast<unsigned char>(c)) && pos_ + 1 < text_.size() &&
        std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
      const std::string two(text_.substr(pos_, 2));
      if (atomic_number(two) != 0) {
        pos_ += 2;
        return make_leaf(AtomExpr::Op::AliphElement, two);
      }
    }
    switch (c) {
      case '*': ++pos_; return make_leaf(AtomExpr::Op::True);
      case 'a': {
        // Longest match: 'as' is aromatic arsenic.
        if (text_.compare(pos_, 2, "as") == 0) {
          pos_ += 2;
          return make_leaf(AtomExpr::Op::AromElement, "As");
        }
        ++pos_;
        return make_leaf(AtomExpr::Op::Aromatic);
      }
      case 'A': ++pos_; return make_leaf(AtomExpr::Op::Aliphatic);
      case '#': {
        ++pos_;
        if (!std::isdigit(static_cast<unsigned char>(peek())))
          malformed("'#' must be followed by an atomic number");
        return make_leaf(AtomExpr::Op::AtomicNum, "", parse_digits(0));
      }
      case 'D': ++pos_; return make_leaf(AtomExpr::Op::Degree, "", parse_digits(1));
      case 'H': ++pos_; return make_leaf(AtomExpr::Op::TotalH, "", parse_digits(1));
      case 'X': ++pos_; return make_leaf(AtomExpr::Op::Connectivity, "", parse_digits(1));
      case 'R': {
        ++pos_;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          const int n = parse_digits(0);
          if (n == 0) return make_leaf(AtomExpr::Op::NotInRing);
          unsupported("R" + std::to_string(n));
        }
        return make_leaf(AtomExpr::Op::InRing);
      }
      case '+':
      case '-': {
        ++pos_;
        const int sign = c == '+' ? 1 : -1;
        return make_leaf(AtomExpr::Op::Charge, "", sign * parse_digits(1));
      }
      case '$': unsupported("$(...)");
      case 'r': unsupported("r<n>");
      case 'v': unsupported("v<n>");
      case 'x': unsupported("x<n>");
      case '@': unsupported("@");
      case '\0': malformed("empty atom expression");
      default: break;
    }

    if (std::islower(static_cast<unsigned char>(c))) {
      if (text_.compare(pos_, 2, "se") == 0) {
        pos_ += 2;
        return make_leaf(AtomExpr::Op::AromElement, "Se");
      }
      if (std::string_view("bcnops").find(c) != std::string_view::npos) {
        ++pos_;
        return make_leaf(AtomExpr::Op::AromElement,
                         std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c)))));
      }
      unsupported(std::string(1, c));
    }

    if (std::isupper(static_cast<unsigned char>(c))) {
      const std::string one(1, c);
      if (atomic_number(one) != 0) {
        ++pos_;
        return make_leaf(AtomExpr::Op::AliphElement, one);
      }
      unsupported(one);
    }

    unsupported(std::string(1, c));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct OpenRing {
  int atom;
  std::optional<BondPred> pred;
};

class SmartsParser {
 public:
  SmartsParser(std::string_view text, std::string_view name) : text_(text), name_(name) {}

  SmartsPattern run() {
    if (text_.empty()) malformed("empty SMARTS");
    while (pos_ < text_.size()) step();
    if (!ring_.empty()) malformed("unpaired ring closure in '" + std::string(text_) + "'");
    if (!branch_.empty()) malformed("unclosed '(' in '" + std::string(text_) + "'");
    if (pending_) malformed("dangling bond symbol");
    if (pattern_.atoms.empty()) malformed("no atoms in pattern");
    pattern_.source = std::string(text_);
    pattern_.name = std::string(name_);
    pattern_.rebuild_adjacency();
    check_connected();
    return std::move(pattern_);
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void step() {
    const char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (prev_ < 0) malformed("branch before any atom");
        if (pending_) malformed("bond symbol before '('");
        branch_.push_back(prev_);
        return;
      }
      case ')': {
        ++pos_;
        if (branch_.empty()) malformed("unmatched ')'");
        if (pending_) malformed("bond symbol before ')'");
        prev_ = branch_.back();
        branch_.pop_back();
        return;
      }
      case '-': set_pending(BondPred::Single); return;
      case '=': set_pending(BondPred::Double); return;
      case '#': set_pending(BondPred::Triple); return;
      case ':': set_pending(BondPred::Aromatic); return;
      case '~': set_pending(BondPred::Any); return;
      case '/':
      case '\\': unsupported(std::string(1, c));
      case '.': unsupported(".");
      case '%': {
        ++pos_;
        if (pos_ + 1 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))
          malformed("'%' ring closure needs two digits");
        const int id = (text_[pos_] - '0') * 10 + (text_[pos_ + 1] - '0');
        pos_ += 2;
        ring_closure(id);
        return;
      }
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          ++pos_;
          ring_closure(c - '0');
          return;
        }
        parse_pattern_atom();
        return;
    }
  }

  void set_pending(BondPred pred) {
    ++pos_;
    if (pending_) malformed("two bond symbols in a row");
    pending_ = pred;
  }

  void ring_closure(int id) {
    if (prev_ < 0) malformed("ring closure before any atom");
    auto it = ring_.find(id);
    if (it == ring_.end()) {
      ring_.emplace(id, OpenRing{prev_, pending_});
      pending_.reset();
      return;
    }
    const OpenRing open = it->second;
    ring_.erase(it);
    if (open.atom == prev_) malformed("ring closure bonds an atom to itself");
    if (open.pred && pending_ && *open.pred != *pending_)
      malformed("conflicting bond predicates on ring closure");
    const BondPred pred =
        open.pred ? *open.pred : (pending_ ? *pending_ : BondPred::SingleOrAromatic);
    pending_.reset();
    add_bond(open.atom, prev_, pred);
  }

  void add_bond(int a, int b, BondPred pred) {
    for (const SmartsBond& bond : pattern_.bonds)
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
        malformed("duplicate bond between pattern atoms");
    pattern_.bonds.push_back(SmartsBond{a, b, pred});
  }

  void parse_pattern_atom() {
    ExprPtr expr;
    const char c = peek();
    if (c == '[') {
      const auto close = text_.find(']', pos_);
      if (close == std::string_view::npos) malformed("unterminated '['");
      const std::string_view inner = text_.substr(pos_ + 1, close - pos_ - 1);
      expr = AtomExprParser(inner).parse();
      pos_ = close + 1;
    } else if (c == '*') {
      ++pos_;
      expr = make_leaf(AtomExpr::Op::True);
    } else if (c == 'A') {
      ++pos_;
      expr = make_leaf(AtomExpr::Op::Aliphatic);
    } else if (c == 'a') {
      ++pos_;
      expr = make_leaf(AtomExpr::Op::Aromatic);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      if (text_.compare(pos_, 2, "Cl") == 0) {
        pos_ += 2;
        expr = make_leaf(AtomExpr::Op::AliphElement, "Cl");
      } else if (text_.compare(pos_, 2, "Br") == 0) {
        pos_ += 2;
        expr = make_leaf(AtomExpr::Op::AliphElement, "Br");
      } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
        ++pos_;
        expr = make_leaf(AtomExpr::Op::AliphElement, std::string(1, c));
      } else {
        unsupported(std::string(1, c));
      }
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      ++pos_;
      expr = make_leaf(AtomExpr::Op::AromElement,
                       std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c)))));
    } else if (c == '$') {
      unsupported("$(...)");
    } else {
      unsupported(std::string(1, c));
    }

    const int index = pattern_.size();
    pattern_.atoms.push_back(std::move(expr));
    if (prev_ >= 0) {
      add_bond(prev_, index, pending_ ? *pending_ : BondPred::SingleOrAromatic);
    } else if (pending_) {
      malformed("bond symbol before first atom");
    }
    pending_.reset();
    prev_ = index;
  }

  void check_connected() const {
    std::vector<bool> seen(pattern_.atoms.size(), false);
    std::vector<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      const int at = queue.back();
      queue.pop_back();
      for (const auto& [nbr, bond] : pattern_.adjacency[at]) {
        if (!seen[nbr]) {
          seen[nbr] = true;
          queue.push_back(nbr);
        }
      }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
      malformed("pattern graph is not connected");
  }

  std::string_view text_;
  std::string_view name_;
  std::size_t pos_ = 0;
  SmartsPattern pattern_;
  int prev_ = -1;
  std::optional<BondPred> pending_;
  std::vector<int> branch_;
  std::map<int, OpenRing> ring_;
};

bool eval_bond(BondPred pred, BondOrder order) {
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

}  // namespace

bool AtomExpr::eval(const Molecule& mol, int atom) const {
  const Atom& a = mol.atoms[atom];
  switch (op) {
    case Op::True: return true;
    case Op::Aliphatic: return !a.aromatic;
    case Op::Aromatic: return a.aromatic;
    case Op::AliphElement: return !a.aromatic && a.element == symbol;
    case Op::AromElement: return a.aromatic && a.element == symbol;
    case Op::AtomicNum: return atomic_number(a.element) == arg;
    case Op::Degree: return mol.degree(atom) == arg;
    case Op::TotalH: return mol.total_h(atom) == arg;
    case Op::Connectivity: return mol.degree(atom) + a.implicit_h == arg;
    case Op::InRing: return a.in_ring;
    case Op::NotInRing: return !a.in_ring;
    case Op::Charge: return a.formal_charge == arg;
    case Op::Not: return !lhs->eval(mol, atom);
    case Op::And: return lhs->eval(mol, atom) && rhs->eval(mol, atom);
    case Op::Or: return lhs->eval(mol, atom) || rhs->eval(mol, atom);
  }
  return false;
}

void SmartsPattern::rebuild_adjacency() {
  adjacency.assign(atoms.size(), {});
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    adjacency[bonds[i].a].emplace_back(bonds[i].b, static_cast<int>(i));
    adjacency[bonds[i].b].emplace_back(bonds[i].a, static_cast<int>(i));
  }
}

SmartsPattern parse_smarts(std::string_view text, std::string_view name) {
  return SmartsParser(text, name).run();
}

std::vector<std::vector<int>> match_pattern(const Molecule& mol, const SmartsPattern& pattern) {
  const int np = pattern.size();
  const int nm = static_cast<int>(mol.atoms.size());

  std::vector<std::vector<int>> candidates(np);
  for (int p = 0; p < np; ++p) {
    for (int m = 0; m < nm; ++m)
      if (pattern.atoms[p]->eval(mol, m)) candidates[p].push_back(m);
    if (candidates[p].empty()) return {};
  }

  // Visit order: most-constrained atom first, then grow along pattern edges,
  // always picking the frontier atom with the fewest candidates. The pattern
  // is connected, so this covers every atom.
  std::vector<int> order;
  std::vector<bool> placed(np, false);
  {
    int start = 0;
    for (int p = 1; p < np; ++p)
      if (candidates[p].size() < candidates[start].size()) start = p;
    order.push_back(start);
    placed[start] = true;
    while (static_cast<int>(order.size()) < np) {
      int best = -1;
      for (int p = 0; p < np; ++p) {
        if (placed[p]) continue;
        bool adjacent = false;
        for (const auto& [nbr, bond] : pattern.adjacency[p])
          if (placed[nbr]) adjacent = true;
        if (!adjacent) continue;
        if (best < 0 || candidates[p].size() < candidates[best].size()) best = p;
      }
      order.push_back(best);
      placed[best] = true;
    }
  }

  std::vector<int> map(np, -1);
  std::vector<bool> used(nm, false);
  // sorted atom set -> first mapping found (search order is deterministic).
  std::map<std::vector<int>, std::vector<int>> found;

  auto backtrack = [&](auto&& self, std::size_t depth) -> void {
    if (depth == order.size()) {
      std::vector<int> key(map);
      std::sort(key.begin(), key.end());
      found.emplace(std::move(key), map);
      return;
    }
    const int p = order[depth];
    for (int m : candidates[p]) {
      if (used[m]) continue;
      bool ok = true;
      for (const auto& [nbr, bond_idx] : pattern.adjacency[p]) {
        if (map[nbr] < 0) continue;
        const Bond* bond = mol.bond_between(m, map[nbr]);
        if (bond == nullptr || !eval_bond(pattern.bonds[bond_idx].pred, bond->order)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      map[p] = m;
      used[m] = true;
      self(self, depth + 1);
      map[p] = -1;
      used[m] = false;
    }
  };
  backtrack(backtrack, 0);

  std::vector<std::vector<int>> result;
  result.reserve(found.size());
  for (auto& [key, mapping] : found) result.push_back(std::move(mapping));
  return result;
}

int FunctionalGroupLibrary::index_of(const std::string& name) const {
  auto it = name_index.find(name);
  return it == name_index.end() ? -1 : it->second;
}

FunctionalGroupLibrary FunctionalGroupLibrary::from_entries(
    const std::vector<std::pair<std::string, std::string>>& name_smarts,
    std::string version_tag) {
  FunctionalGroupLibrary lib;
  lib.version_tag = std::move(version_tag);
  for (const auto& [name, smarts] : name_smarts) {
    if (lib.name_index.count(name))
      throw LibraryError(LibraryError::Kind::DuplicateName, "duplicate FG name '" + name + "'");
    lib.name_index.emplace(name, lib.size());
    lib.entries.push_back(Entry{name, parse_smarts(smarts, name)});
  }
  return lib;
}

FunctionalGroupLibrary FunctionalGroupLibrary::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LibraryError(LibraryError::Kind::Io, "cannot open FG library '" + path + "'");

  std::vector<std::pair<std::string, std::string>> rows;
  std::string version;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string prefix = "# version:";
      if (line.compare(0, prefix.size(), prefix) == 0) {
        version = line.substr(prefix.size());
        version.erase(0, version.find_first_not_of(' '));
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw LibraryError(LibraryError::Kind::Io,
                         path + ":" + std::to_string(lineno) + ": expected name<TAB>smarts");
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_entries(rows, version);
}

FeatureVector extract_features(const Molecule& mol, const FunctionalGroupLibrary& library) {
  FeatureVector vec;
  vec.dimension = library.size();
  for (int i = 0; i < library.size(); ++i) {
    const auto matches = match_pattern(mol, library.entries[i].pattern);
    if (!matches.empty()) vec.counts.emplace(i, static_cast<int>(matches.size()));
  }
  return vec;
}

std::vector<FeatureVector> extract_features_batch_serial(const std::vector<Molecule>& mols,
                                                         const FunctionalGroupLibrary& library) {
  std::vector<FeatureVector> out(mols.size());
  for (std::size_t i = 0; i < mols.size(); ++i) out[i] = extract_features(mols[i], library);
  return out;
}

std::vector<FeatureVector> extract_features_batch(const std::vector<Molecule>& mols,
                                                  const FunctionalGroupLibrary& library) {
  std::vector<FeatureVector> out(mols.size());
  const std::int64_t n = static_cast<std::int64_t>(mols.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) out[i] = extract_features(mols[i], library);
  return out;
}

std::vector<std::pair<std::string, int>> found_fg_names(const FeatureVector& vec,
                                                        const FunctionalGroupLibrary& library) {
  if (vec.dimension != library.size())
    throw FeatureError(FeatureError::Kind::DimensionMismatch,
                       "feature vector dimension " + std::to_string(vec.dimension) +
                           " does not match library size " + std::to_string(library.size()));
  std::vector<std::pair<std::string, int>> out;
  for (const auto& [index, count] : vec.counts)
    out.emplace_back(library.entries[index].name, count);
  return out;
}

}  // namespace treekd
