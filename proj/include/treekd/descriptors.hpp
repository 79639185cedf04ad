#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treekd/errors.hpp"
#include "treekd/molgraph.hpp"

namespace treekd {

class DescriptorError : public Error {
 public:
  enum class Kind { WidthMismatch };
  DescriptorError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

// Fixed-width bitset fingerprint.
class Fingerprint {
 public:
  explicit Fingerprint(int width = 2048)
      : width_(width), words_((width + 63) / 64, 0) {}

  int width() const { return width_; }
  void set(std::uint64_t bit) { words_[bit % width_ / 64] |= 1ull << (bit % width_ % 64); }
  bool test(int bit) const { return (words_[bit / 64] >> (bit % 64)) & 1; }
  int popcount() const;

  std::string algorithm_tag = "circular-r2";

  friend double tanimoto(const Fingerprint& a, const Fingerprint& b);

 private:
  int width_;
  std::vector<std::uint64_t> words_;
};

// Circular fingerprint: for radius 0..2, each atom's invariant tuple
// (element, charge, degree, H count, aromatic, ring flag) is hashed and
// iteratively combined with the sorted hashes of its neighbors; every
// (radius, hash) sets bit hash mod width. Molecule must be ring-perceived.
Fingerprint fingerprint(const Molecule& mol, int width = 2048);

// |a and b| / |a or b|; 1.0 when both fingerprints are all-zero.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

struct ScaffoldKey {
  std::uint64_t hash = 0;
  bool is_empty = false;

  friend bool operator==(const ScaffoldKey&, const ScaffoldKey&) = default;
  friend auto operator<=>(const ScaffoldKey&, const ScaffoldKey&) = default;
};

// Bemis-Murcko scaffold key: chain atoms (degree <= 1 outside rings) are
// peeled until fixpoint; the remaining ring systems + linkers are hashed by
// 3 rounds of Weisfeiler-Lehman refinement over (element, aromatic, ring)
// labels, combined order-independently. Acyclic molecules yield is_empty with
// sentinel hash 0. Molecule must be ring-perceived.
ScaffoldKey murcko_scaffold(const Molecule& mol);

}  // namespace treekd
