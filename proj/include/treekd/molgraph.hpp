#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treekd/errors.hpp"

namespace treekd {

enum class BondOrder { Single, Double, Triple, Aromatic };

struct Atom {
  std::string element;
  bool aromatic = false;
  int formal_charge = 0;
  std::optional<int> explicit_h;  // bracket H count; unset for organic-subset atoms
  int implicit_h = 0;
  bool in_ring = false;
  int index = 0;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
};

class SmilesError : public Error {
 public:
  enum class Kind {
    UnbalancedRing,
    UnbalancedBranch,
    UnknownAtomSymbol,
    ValenceOverflow,
    Syntax,
  };

  SmilesError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

// Attributed molecular graph. Immutable once parsed; safe to share across
// threads.
struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source_smiles;

  // (neighbor atom index, bond index) per atom; built by rebuild_adjacency.
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  int degree(int atom) const { return static_cast<int>(adjacency[atom].size()); }
  const Bond* bond_between(int a, int b) const;
  // Implicit hydrogens plus explicitly drawn H neighbors.
  int total_h(int atom) const;
  void rebuild_adjacency();
};

// Parses the supported SMILES subset: organic-subset bare atoms
// (B C N O P S F Cl Br I), aromatic lowercase (b c n o p s), bracket atoms
// with optional isotope / H-count / charge, bonds - = # :, branches, ring
// closures (1-9 and %nn), and dot disconnection. Stereo markers (/ \ @ @@)
// are accepted and discarded. Ring membership flags are NOT set here; call
// perceive_rings.
Molecule parse_smiles(std::string_view text);

// Sets atom.in_ring to true exactly for atoms lying on at least one cycle.
// Idempotent.
void perceive_rings(Molecule& mol);

// parse_smiles + perceive_rings, the form every downstream consumer wants.
Molecule parse_molecule(std::string_view text);

// Atomic number for a periodic-table symbol, or 0 if unknown.
int atomic_number(std::string_view symbol);

// True if the symbol may carry an aromatic flag (B C N O P S As Se).
bool aromatic_allowed(std::string_view symbol);

}  // namespace treekd
