#include "treekd/descriptors.hpp"

#include <algorithm>
#include <bit>

#include "treekd/rng.hpp"

namespace treekd {

namespace {

std::uint64_t atom_invariant(const Molecule& mol, int atom) {
  const Atom& a = mol.atoms[atom];
  std::uint64_t h = 0x7d6f1e6a2c3b5a91ull;
  h = hash_combine(h, static_cast<std::uint64_t>(atomic_number(a.element)));
  h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 16));
  h = hash_combine(h, static_cast<std::uint64_t>(mol.degree(atom)));
  h = hash_combine(h, static_cast<std::uint64_t>(mol.total_h(atom)));
  h = hash_combine(h, a.aromatic ? 1 : 0);
  h = hash_combine(h, a.in_ring ? 1 : 0);
  return h;
}

std::uint64_t combine_with_neighbors(std::uint64_t own, std::vector<std::uint64_t> nbrs) {
  std::sort(nbrs.begin(), nbrs.end());
  std::uint64_t h = hash_combine(0x51e03f9b7a2d4c6bull, own);
  for (std::uint64_t n : nbrs) h = hash_combine(h, n);
  return h;
}

}  // namespace

int Fingerprint::popcount() const {
  int total = 0;
  for (std::uint64_t w : words_) total += std::popcount(w);
  return total;
}

Fingerprint fingerprint(const Molecule& mol, int width) {
  Fingerprint fp(width);
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<std::uint64_t> hashes(n);
  for (int i = 0; i < n; ++i) hashes[i] = atom_invariant(mol, i);

  for (int radius = 0; radius <= 2; ++radius) {
    if (radius > 0) {
      std::vector<std::uint64_t> next(n);
      for (int i = 0; i < n; ++i) {
        std::vector<std::uint64_t> nbrs;
        nbrs.reserve(mol.adjacency[i].size());
        for (const auto& [nbr, bond] : mol.adjacency[i]) nbrs.push_back(hashes[nbr]);
        next[i] = combine_with_neighbors(hashes[i], std::move(nbrs));
      }
      hashes = std::move(next);
    }
    for (int i = 0; i < n; ++i) fp.set(hashes[i]);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width_ != b.width_)
    throw DescriptorError(DescriptorError::Kind::WidthMismatch,
                          "fingerprint widths differ: " + std::to_string(a.width_) + " vs " +
                              std::to_string(b.width_));
  std::int64_t inter = 0, uni = 0;
  for (std::size_t w = 0; w < a.words_.size(); ++w) {
    inter += std::popcount(a.words_[w] & b.words_[w]);
    uni += std::popcount(a.words_[w] | b.words_[w]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ScaffoldKey murcko_scaffold(const Molecule& mol) {
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<bool> kept(n, true);
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = mol.degree(i);

  // Peel chain atoms until fixpoint. Ring atoms always keep degree >= 2
  // within their cycle, so only acyclic appendages erode.
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (degree[i] <= 1 && !mol.atoms[i].in_ring) queue.push_back(i);
  while (!queue.empty()) {
    const int at = queue.back();
    queue.pop_back();
    if (!kept[at]) continue;
    kept[at] = false;
    for (const auto& [nbr, bond] : mol.adjacency[at]) {
      if (!kept[nbr]) continue;
      if (--degree[nbr] <= 1 && !mol.atoms[nbr].in_ring) queue.push_back(nbr);
    }
  }

  std::vector<int> scaffold;
  for (int i = 0; i < n; ++i)
    if (kept[i]) scaffold.push_back(i);
  if (scaffold.empty()) return ScaffoldKey{0, true};

  // Weisfeiler-Lehman refinement on the scaffold subgraph.
  std::vector<std::uint64_t> label(n, 0);
  std::int64_t edge_count = 0;
  for (int i : scaffold) {
    const Atom& a = mol.atoms[i];
    std::uint64_t h = 0x2c8f3a917e5d6b43ull;
    h = hash_combine(h, static_cast<std::uint64_t>(atomic_number(a.element)));
    h = hash_combine(h, a.aromatic ? 1 : 0);
    h = hash_combine(h, a.in_ring ? 1 : 0);
    label[i] = h;
  }
  for (int i : scaffold)
    for (const auto& [nbr, bond] : mol.adjacency[i])
      if (kept[nbr]) ++edge_count;
  edge_count /= 2;

  for (int round = 0; round < 3; ++round) {
    std::vector<std::uint64_t> next(label);
    for (int i : scaffold) {
      std::vector<std::uint64_t> nbrs;
      for (const auto& [nbr, bond] : mol.adjacency[i])
        if (kept[nbr]) nbrs.push_back(label[nbr]);
      next[i] = combine_with_neighbors(label[i], std::move(nbrs));
    }
    label = std::move(next);
  }

  std::vector<std::uint64_t> final_labels;
  final_labels.reserve(scaffold.size());
  for (int i : scaffold) final_labels.push_back(label[i]);
  std::sort(final_labels.begin(), final_labels.end());

  std::uint64_t h = hash_combine(0x44c1e2b98d7f3a55ull, scaffold.size());
  h = hash_combine(h, static_cast<std::uint64_t>(edge_count));
  for (std::uint64_t l : final_labels) h = hash_combine(h, l);
  if (h == 0) h = 1;  // 0 is the acyclic sentinel
  return ScaffoldKey{h, false};
}

}  // namespace treekd
