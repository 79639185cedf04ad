#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treekd/errors.hpp"
#include "treekd/molgraph.hpp"

namespace treekd {

class SmartsError : public Error {
 public:
  enum class Kind { UnsupportedPrimitive, MalformedExpression };
  SmartsError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

class FeatureError : public Error {
 public:
  enum class Kind { DimensionMismatch };
  FeatureError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

// Atom predicate expression. Leaves are primitives; Not/And/Or combine them.
struct AtomExpr {
  enum class Op {
    True,          // *
    Aliphatic,     // A
    Aromatic,      // a
    AliphElement,  // C, [Cl], ...
    AromElement,   // c, [se], ...
    AtomicNum,     // #n
    Degree,        // Dn
    TotalH,        // Hn
    Connectivity,  // Xn
    InRing,        // R
    NotInRing,     // R0
    Charge,        // +n / -n
    Not,
    And,
    Or,
  };

  Op op = Op::True;
  std::string symbol;  // element ops
  int arg = 0;         // numeric ops
  std::unique_ptr<AtomExpr> lhs, rhs;

  bool eval(const Molecule& mol, int atom) const;
};

enum class BondPred { Single, Double, Triple, Aromatic, Any, SingleOrAromatic };

struct SmartsBond {
  int a = 0;
  int b = 0;
  BondPred pred = BondPred::SingleOrAromatic;
};

struct SmartsPattern {
  std::vector<std::unique_ptr<AtomExpr>> atoms;
  std::vector<SmartsBond> bonds;
  std::string source;
  std::string name;

  std::vector<std::vector<std::pair<int, int>>> adjacency;  // (atom, bond index)
  void rebuild_adjacency();
  int size() const { return static_cast<int>(atoms.size()); }
};

// Parses the supported SMARTS subset. Atom primitives: * A a, element
// symbols, #n, Dn, Hn, Xn, R, R0, +/-/+n/-n, with ! & , ; logic
// (precedence ! > & > , > ;, adjacency means &). Bond primitives: - = # : ~;
// the default bond is "single or aromatic". Branches and ring closures work
// as in SMILES. Recursive $(...) and ring-size r<n> are rejected as
// UnsupportedPrimitive.
SmartsPattern parse_smarts(std::string_view text, std::string_view name = "");

// All embeddings of the pattern into the molecule. Each result maps pattern
// atom position -> molecule atom index. Results are deduplicated by the SET
// of matched molecule atoms (automorphic relabelings collapse to one match)
// and ordered lexicographically by the sorted atom-index set. The molecule
// must be ring-perceived.
std::vector<std::vector<int>> match_pattern(const Molecule& mol, const SmartsPattern& pattern);

struct FunctionalGroupLibrary {
  struct Entry {
    std::string name;
    SmartsPattern pattern;
  };

  std::vector<Entry> entries;
  std::string version_tag;
  std::unordered_map<std::string, int> name_index;

  int size() const { return static_cast<int>(entries.size()); }
  // -1 when absent.
  int index_of(const std::string& name) const;

  // TSV with lines "name<TAB>smarts"; '#' starts a comment. A comment of the
  // form "# version: <tag>" sets version_tag.
  static FunctionalGroupLibrary load_tsv(const std::string& path);
  static FunctionalGroupLibrary from_entries(
      const std::vector<std::pair<std::string, std::string>>& name_smarts,
      std::string version_tag = "");
};

class LibraryError : public Error {
 public:
  enum class Kind { Io, DuplicateName };
  LibraryError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

// Sparse FG-occurrence counts. Zero counts are never stored.
struct FeatureVector {
  std::map<int, int> counts;
  int dimension = 0;

  int at(int index) const {
    auto it = counts.find(index);
    return it == counts.end() ? 0 : it->second;
  }
};

FeatureVector extract_features(const Molecule& mol, const FunctionalGroupLibrary& library);

// Batch kernel over molecules; OpenMP-parallel. extract_features is pure, so
// the result is identical to the serial reference for any thread schedule.
std::vector<FeatureVector> extract_features_batch(const std::vector<Molecule>& mols,
                                                  const FunctionalGroupLibrary& library);
std::vector<FeatureVector> extract_features_batch_serial(const std::vector<Molecule>& mols,
                                                         const FunctionalGroupLibrary& library);

// Entries with count >= 1 in library order.
std::vector<std::pair<std::string, int>> found_fg_names(const FeatureVector& vec,
                                                        const FunctionalGroupLibrary& library);

}  // namespace treekd
