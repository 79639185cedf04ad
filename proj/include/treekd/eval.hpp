#pragma once

#include <span>
#include <string>
#include <vector>

#include "treekd/dataset.hpp"
#include "treekd/descriptors.hpp"
#include "treekd/errors.hpp"

namespace treekd {

class EvalError : public Error {
 public:
  enum class Kind { LengthMismatch, Empty, DegenerateLabels, ZeroVariance, MissingMember };
  EvalError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

struct MetricReport {
  std::string metric;
  double value = 0.0;
  long n = 0;
  bool higher_is_better = true;
};

MetricReport mae(std::span<const double> pred, std::span<const double> truth);

// Mann-Whitney formulation: over all (positive, negative) pairs, credit 1
// when the positive scores higher, 0.5 on ties. Computed via average ranks,
// which is exactly the pairwise count.
MetricReport auroc(std::span<const double> scores, std::span<const double> labels);

// Average precision with step interpolation; ties in score break by original
// index (stable sort, descending).
MetricReport auprc(std::span<const double> scores, std::span<const double> labels);

// Pearson correlation of average ranks (ties receive the mean rank).
MetricReport spearman(std::span<const double> pred, std::span<const double> truth);

MetricReport compute_metric(MetricKind kind, std::span<const double> pred,
                            std::span<const double> truth);

struct QuadrantCounts {
  long both_correct = 0;
  long only_tree = 0;
  long only_llm = 0;
  long both_wrong = 0;
};

QuadrantCounts quadrants(const std::vector<bool>& tree_correct,
                         const std::vector<bool>& model_correct);

struct CliffPair {
  int id_a = 0;
  int id_b = 0;
  double similarity = 0.0;
  int label_a = 0;
  int label_b = 0;
};

// All unordered record pairs with Tanimoto above the threshold and opposite
// classification labels, ordered by (id_a, id_b). OpenMP-parallel over the
// O(n^2) pair scan; the serial variant is the reference.
std::vector<CliffPair> find_cliff_pairs(const std::vector<MoleculeRecord>& records,
                                        const std::vector<Fingerprint>& fingerprints,
                                        double threshold = 0.8);
std::vector<CliffPair> find_cliff_pairs_serial(const std::vector<MoleculeRecord>& records,
                                               const std::vector<Fingerprint>& fingerprints,
                                               double threshold = 0.8);

// Count of pairs whose members are both predicted correctly. correctness is
// indexed by record id.
long cliff_accuracy(const std::vector<CliffPair>& pairs, const std::vector<bool>& correctness);

}  // namespace treekd
