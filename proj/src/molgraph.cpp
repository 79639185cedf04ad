#include "treekd/molgraph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>
#include <unordered_map>

namespace treekd {

namespace {

struct ElementInfo {
  const char* symbol;
  int number;
};

// Symbols accepted inside brackets. Order is irrelevant; lookup is by map.
constexpr ElementInfo kElements[] = {
    {"H", 1},    {"He", 2},   {"Li", 3},   {"Be", 4},   {"B", 5},
    {"C", 6},    {"N", 7},    {"O", 8},    {"F", 9},    {"Ne", 10},
    {"Na", 11},  {"Mg", 12},  {"Al", 13},  {"Si", 14},  {"P", 15},
    {"S", 16},   {"Cl", 17},  {"Ar", 18},  {"K", 19},   {"Ca", 20},
    {"Sc", 21},  {"Ti", 22},  {"V", 23},   {"Cr", 24},  {"Mn", 25},
    {"Fe", 26},  {"Co", 27},  {"Ni", 28},  {"Cu", 29},  {"Zn", 30},
    {"Ga", 31},  {"Ge", 32},  {"As", 33},  {"Se", 34},  {"Br", 35},
    {"Kr", 36},  {"Rb", 37},  {"Sr", 38},  {"Y", 39},   {"Zr", 40},
    {"Nb", 41},  {"Mo", 42},  {"Tc", 43},  {"Ru", 44},  {"Rh", 45},
    {"Pd", 46},  {"Ag", 47},  {"Cd", 48},  {"In", 49},  {"Sn", 50},
    {"Sb", 51},  {"Te", 52},  {"I", 53},   {"Xe", 54},  {"Cs", 55},
    {"Ba", 56},  {"La", 57},  {"Ce", 58},  {"Pr", 59},  {"Nd", 60},
    {"Sm", 62},  {"Eu", 63},  {"Gd", 64},  {"Tb", 65},  {"Dy", 66},
    {"Ho", 67},  {"Er", 68},  {"Tm", 69},  {"Yb", 70},  {"Lu", 71},
    {"Hf", 72},  {"Ta", 73},  {"W", 74},   {"Re", 75},  {"Os", 76},
    {"Ir", 77},  {"Pt", 78},  {"Au", 79},  {"Hg", 80},  {"Tl", 81},
    {"Pb", 82},  {"Bi", 83},  {"Po", 84},  {"At", 85},  {"Rn", 86},
    {"Fr", 87},  {"Ra", 88},  {"Ac", 89},  {"Th", 90},  {"Pa", 91},
    {"U", 92},
};

const std::unordered_map<std::string_view, int>& element_table() {
  static const std::unordered_map<std::string_view, int> table = [] {
    std::unordered_map<std::string_view, int> t;
    for (const auto& e : kElements) t.emplace(e.symbol, e.number);
    return t;
  }();
  return table;
}

// Standard valences used to fill implicit hydrogens on bare organic-subset
// atoms. Multi-valued entries pick the smallest valence covering the bonds.
const std::map<std::string_view, std::vector<int>>& valence_table() {
  static const std::map<std::string_view, std::vector<int>> table = {
      {"B", {3}},  {"C", {4}},  {"N", {3}},       {"O", {2}},
      {"P", {3, 5}}, {"S", {2, 4, 6}}, {"F", {1}}, {"Cl", {1}},
      {"Br", {1}}, {"I", {1}},
  };
  return table;
}

[[noreturn]] void fail(SmilesError::Kind kind, const std::string& msg) {
  throw SmilesError(kind, msg);
}

struct OpenRing {
  int atom;
  std::optional<BondOrder> order;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule run() {
    if (text_.empty()) fail(SmilesError::Kind::Syntax, "empty SMILES");
    if (text_.size() > 4096) fail(SmilesError::Kind::Syntax, "SMILES longer than 4096 characters");
    while (pos_ < text_.size()) step();
    if (!ring_.empty())
      fail(SmilesError::Kind::UnbalancedRing,
           "unpaired ring-closure digit in '" + std::string(text_) + "'");
    if (!branch_.empty())
      fail(SmilesError::Kind::UnbalancedBranch, "unclosed '(' in '" + std::string(text_) + "'");
    if (pending_)
      fail(SmilesError::Kind::Syntax, "dangling bond symbol at end of input");
    if (mol_.atoms.empty()) fail(SmilesError::Kind::Syntax, "no atoms in input");
    mol_.source_smiles = std::string(text_);
    mol_.rebuild_adjacency();
    assign_implicit_h();
    return std::move(mol_);
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char take() { return text_[pos_++]; }

  void step() {
    const char c = peek();
    switch (c) {
      case '(':
        take();
        if (prev_ < 0) fail(SmilesError::Kind::Syntax, "branch before any atom");
        if (pending_) fail(SmilesError::Kind::Syntax, "bond symbol before '('");
        branch_.push_back(prev_);
        return;
      case ')':
        take();
        if (branch_.empty()) fail(SmilesError::Kind::UnbalancedBranch, "unmatched ')'");
        if (pending_) fail(SmilesError::Kind::Syntax, "bond symbol before ')'");
        prev_ = branch_.back();
        branch_.pop_back();
        return;
      case '-': set_pending(BondOrder::Single); return;
      case '=': set_pending(BondOrder::Double); return;
      case '#': set_pending(BondOrder::Triple); return;
      case ':': set_pending(BondOrder::Aromatic); return;
      case '/':
      case '\\':
        // Stereo bond markers: accepted, treated as single bonds.
        set_pending(BondOrder::Single);
        return;
      case '.':
        take();
        if (pending_) fail(SmilesError::Kind::Syntax, "bond symbol before '.'");
        prev_ = -1;
        return;
      case '%': {
        take();
        if (pos_ + 1 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))
          fail(SmilesError::Kind::Syntax, "'%' ring closure needs two digits");
        const int id = (take() - '0') * 10 + (take() - '0');
        ring_closure(id);
        return;
      }
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          take();
          ring_closure(c - '0');
          return;
        }
        parse_atom();
        return;
    }
  }

  void set_pending(BondOrder order) {
    take();
    if (pending_) fail(SmilesError::Kind::Syntax, "two bond symbols in a row");
    pending_ = order;
  }

  void ring_closure(int id) {
    if (prev_ < 0) fail(SmilesError::Kind::Syntax, "ring closure before any atom");
    auto it = ring_.find(id);
    if (it == ring_.end()) {
      ring_.emplace(id, OpenRing{prev_, pending_});
      pending_.reset();
      return;
    }
    const OpenRing open = it->second;
    ring_.erase(it);
    if (open.atom == prev_)
      fail(SmilesError::Kind::Syntax, "ring closure bonds an atom to itself");
    std::optional<BondOrder> order;
    if (open.order && pending_ && *open.order != *pending_)
      fail(SmilesError::Kind::Syntax, "conflicting bond orders on ring closure");
    order = open.order ? open.order : pending_;
    pending_.reset();
    add_bond(open.atom, prev_, order);
  }

  void add_bond(int a, int b, std::optional<BondOrder> order) {
    for (const Bond& bond : mol_.bonds) {
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
        fail(SmilesError::Kind::Syntax, "duplicate bond between atoms");
    }
    BondOrder o;
    if (order) {
      o = *order;
    } else {
      o = (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) ? BondOrder::Aromatic
                                                             : BondOrder::Single;
    }
    mol_.bonds.push_back(Bond{a, b, o});
  }

  void parse_atom() {
    Atom atom;
    const char c = peek();
    if (c == '[') {
      parse_bracket_atom(atom);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      // Two-letter organic subset first (Cl, Br), then single letters.
      if (text_.compare(pos_, 2, "Cl") == 0) {
        atom.element = "Cl";
        pos_ += 2;
      } else if (text_.compare(pos_, 2, "Br") == 0) {
        atom.element = "Br";
        pos_ += 2;
      } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
        atom.element = std::string(1, take());
      } else {
        fail(SmilesError::Kind::UnknownAtomSymbol,
             std::string("atom symbol '") + c + "' needs brackets");
      }
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      take();
      atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      atom.aromatic = true;
    } else {
      fail(SmilesError::Kind::Syntax, std::string("unexpected character '") + c + "'");
    }

    atom.index = static_cast<int>(mol_.atoms.size());
    mol_.atoms.push_back(atom);
    if (prev_ >= 0) add_bond(prev_, atom.index, pending_);
    pending_.reset();
    prev_ = atom.index;
  }

  void parse_bracket_atom(Atom& atom) {
    take();  // '['
    // Isotope: parsed and discarded.
    while (std::isdigit(static_cast<unsigned char>(peek()))) take();

    atom.element = parse_bracket_symbol(atom);

    int explicit_h = 0;
    bool done = false;
    while (!done) {
      switch (peek()) {
        case '@':
          take();  // chirality discarded
          break;
        case 'H': {
          take();
          explicit_h = 1;
          if (std::isdigit(static_cast<unsigned char>(peek()))) explicit_h = take() - '0';
          break;
        }
        case '+':
        case '-': {
          const int sign = take() == '+' ? 1 : -1;
          int magnitude = 1;
          if (std::isdigit(static_cast<unsigned char>(peek()))) magnitude = take() - '0';
          atom.formal_charge = sign * magnitude;
          break;
        }
        case ']':
          take();
          done = true;
          break;
        case '\0':
          fail(SmilesError::Kind::Syntax, "unterminated bracket atom");
        default:
          fail(SmilesError::Kind::Syntax,
               std::string("unexpected '") + peek() + "' in bracket atom");
      }
    }
    atom.explicit_h = explicit_h;
  }

  std::string parse_bracket_symbol(Atom& atom) {
    const char c = peek();
    if (std::islower(static_cast<unsigned char>(c))) {
      // Aromatic bracket symbols: one of b c n o p s se as.
      std::string sym;
      if (text_.compare(pos_, 2, "se") == 0) {
        sym = "Se";
        pos_ += 2;
      } else if (text_.compare(pos_, 2, "as") == 0) {
        sym = "As";
        pos_ += 2;
      } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
        take();
        sym = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      } else {
        fail(SmilesError::Kind::UnknownAtomSymbol,
             std::string("unknown aromatic symbol '") + c + "'");
      }
      atom.aromatic = true;
      return sym;
    }
    if (!std::isupper(static_cast<unsigned char>(c)))
      fail(SmilesError::Kind::Syntax, "expected element symbol in bracket atom");
    // Longest match: try two letters, then one.
    if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
      const std::string two(text_.substr(pos_, 2));
      if (element_table().count(two)) {
        pos_ += 2;
        return two;
      }
    }
    const std::string one(1, c);
    if (!element_table().count(one))
      fail(SmilesError::Kind::UnknownAtomSymbol, "unknown element '" + one + "'");
    take();
    return one;
  }

  // Bond-order contribution used for valence accounting. Aromatic bonds count
  // as 1: the ring pi system is handled by the per-element aromatic rules
  // below, never charged to a single bond.
  static int order_units(BondOrder order) {
    switch (order) {
      case BondOrder::Single: return 1;
      case BondOrder::Double: return 2;
      case BondOrder::Triple: return 3;
      case BondOrder::Aromatic: return 1;
    }
    return 1;
  }

  void assign_implicit_h() {
    for (Atom& atom : mol_.atoms) {
      if (atom.aromatic && !aromatic_allowed(atom.element))
        fail(SmilesError::Kind::UnknownAtomSymbol,
             "element " + atom.element + " cannot be aromatic");

      int bond_sum = 0;
      for (const auto& [nbr, bond_idx] : mol_.adjacency[atom.index])
        bond_sum += order_units(mol_.bonds[bond_idx].order);

      if (atom.explicit_h) {
        // Bracket atoms are fully specified, so the H count is never
        // inferred and no valence is imposed; charged and hypervalent forms
        // ([N+](=O)[O-], [N](=O)=O) are the author's statement of fact.
        atom.implicit_h = *atom.explicit_h;
        continue;
      }

      const auto& valences = valence_table().at(atom.element);
      if (bond_sum > valences.back())
        fail(SmilesError::Kind::ValenceOverflow,
             "bond orders exceed max valence of " + atom.element);

      if (atom.aromatic) {
        // Kekule-free convention: aromatic C (and B) reserve one valence unit
        // for the ring pi system; bare aromatic heteroatoms get no hydrogens
        // (pyrrole-type NH must be written [nH]).
        if (atom.element == "C" || atom.element == "B") {
          atom.implicit_h = std::max(0, valences.back() - 1 - bond_sum);
        } else {
          atom.implicit_h = 0;
        }
        continue;
      }

      int chosen = valences.back();
      for (int v : valences) {
        if (v >= bond_sum) {
          chosen = v;
          break;
        }
      }
      atom.implicit_h = chosen - bond_sum;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::vector<int> branch_;
  std::map<int, OpenRing> ring_;
};

}  // namespace

const Bond* Molecule::bond_between(int a, int b) const {
  for (const auto& [nbr, bond_idx] : adjacency[a])
    if (nbr == b) return &bonds[bond_idx];
  return nullptr;
}

int Molecule::total_h(int atom) const {
  int h = atoms[atom].implicit_h;
  for (const auto& [nbr, bond_idx] : adjacency[atom])
    if (atoms[nbr].element == "H") ++h;
  return h;
}

void Molecule::rebuild_adjacency() {
  adjacency.assign(atoms.size(), {});
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    adjacency[bonds[i].a].emplace_back(bonds[i].b, static_cast<int>(i));
    adjacency[bonds[i].b].emplace_back(bonds[i].a, static_cast<int>(i));
  }
}

Molecule parse_smiles(std::string_view text) { return SmilesParser(text).run(); }

void perceive_rings(Molecule& mol) {
  const int n = static_cast<int>(mol.atoms.size());
  for (Atom& a : mol.atoms) a.in_ring = false;

  // Bridge detection: an edge lies on a cycle iff it is not a bridge.
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> cyclic_edge(mol.bonds.size(), false);
  int timer = 0;

  struct Frame {
    int node;
    int parent_edge;
    std::size_t next;
  };

  for (int root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < mol.adjacency[f.node].size()) {
        const auto [nbr, edge] = mol.adjacency[f.node][f.next++];
        if (edge == f.parent_edge) continue;
        if (disc[nbr] == -1) {
          disc[nbr] = low[nbr] = timer++;
          stack.push_back({nbr, edge, 0});
        } else {
          low[f.node] = std::min(low[f.node], disc[nbr]);
          cyclic_edge[edge] = true;  // back edge
        }
      } else {
        stack.pop_back();
        if (!stack.empty()) {
          Frame& parent = stack.back();
          low[parent.node] = std::min(low[parent.node], low[f.node]);
          if (low[f.node] <= disc[parent.node]) cyclic_edge[f.parent_edge] = true;
        }
      }
    }
  }

  for (std::size_t e = 0; e < mol.bonds.size(); ++e) {
    if (cyclic_edge[e]) {
      mol.atoms[mol.bonds[e].a].in_ring = true;
      mol.atoms[mol.bonds[e].b].in_ring = true;
    }
  }
}

Molecule parse_molecule(std::string_view text) {
  Molecule mol = parse_smiles(text);
  perceive_rings(mol);
  return mol;
}

int atomic_number(std::string_view symbol) {
  auto it = element_table().find(symbol);
  return it == element_table().end() ? 0 : it->second;
}

bool aromatic_allowed(std::string_view symbol) {
  return symbol == "B" || symbol == "C" || symbol == "N" || symbol == "O" ||
         symbol == "P" || symbol == "S" || symbol == "As" || symbol == "Se";
}

}  // namespace treekd
