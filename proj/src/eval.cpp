#include "treekd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treekd {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b)
    throw EvalError(EvalError::Kind::LengthMismatch,
                    "length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  if (a == 0) throw EvalError(EvalError::Kind::Empty, "empty input");
}

// Average ranks, 1-based; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

MetricReport mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return MetricReport{"MAE", sum / static_cast<double>(pred.size()),
                      static_cast<long>(pred.size()), false};
}

MetricReport auroc(std::span<const double> scores, std::span<const double> labels) {
  check_lengths(scores.size(), labels.size());
  long n_pos = 0;
  for (double l : labels) n_pos += l != 0.0 ? 1 : 0;
  const long n_neg = static_cast<long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw EvalError(EvalError::Kind::DegenerateLabels,
                    "AUROC needs at least one positive and one negative");

  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0.0) rank_sum += ranks[i];
  const double u = rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return MetricReport{"AUROC", u / (static_cast<double>(n_pos) * static_cast<double>(n_neg)),
                      static_cast<long>(scores.size()), true};
}

MetricReport auprc(std::span<const double> scores, std::span<const double> labels) {
  check_lengths(scores.size(), labels.size());
  long n_pos = 0;
  for (double l : labels) n_pos += l != 0.0 ? 1 : 0;
  if (n_pos == 0)
    throw EvalError(EvalError::Kind::DegenerateLabels, "AUPRC needs at least one positive");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  long hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0.0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return MetricReport{"AUPRC", ap / static_cast<double>(n_pos),
                      static_cast<long>(scores.size()), true};
}

MetricReport spearman(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred.size(), truth.size());
  if (pred.size() < 2) throw EvalError(EvalError::Kind::Empty, "Spearman needs length >= 2");

  const std::vector<double> ra = average_ranks(pred);
  const std::vector<double> rb = average_ranks(truth);
  const double n = static_cast<double>(pred.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw EvalError(EvalError::Kind::ZeroVariance, "Spearman undefined for constant input");
  return MetricReport{"Spearman", cov / std::sqrt(var_a * var_b),
                      static_cast<long>(pred.size()), true};
}

MetricReport compute_metric(MetricKind kind, std::span<const double> pred,
                            std::span<const double> truth) {
  switch (kind) {
    case MetricKind::MAE: return mae(pred, truth);
    case MetricKind::AUROC: return auroc(pred, truth);
    case MetricKind::AUPRC: return auprc(pred, truth);
    case MetricKind::Spearman: return spearman(pred, truth);
  }
  throw EvalError(EvalError::Kind::Empty, "unknown metric");
}

QuadrantCounts quadrants(const std::vector<bool>& tree_correct,
                         const std::vector<bool>& model_correct) {
  check_lengths(tree_correct.size(), model_correct.size());
  QuadrantCounts q;
  for (std::size_t i = 0; i < tree_correct.size(); ++i) {
    if (tree_correct[i] && model_correct[i]) ++q.both_correct;
    else if (tree_correct[i]) ++q.only_tree;
    else if (model_correct[i]) ++q.only_llm;
    else ++q.both_wrong;
  }
  return q;
}

std::vector<CliffPair> find_cliff_pairs_serial(const std::vector<MoleculeRecord>& records,
                                               const std::vector<Fingerprint>& fingerprints,
                                               double threshold) {
  std::vector<CliffPair> pairs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (records[i].label == records[j].label) continue;
      const double sim = tanimoto(fingerprints[i], fingerprints[j]);
      if (sim > threshold)
        pairs.push_back(CliffPair{records[i].id, records[j].id, sim,
                                  static_cast<int>(records[i].label),
                                  static_cast<int>(records[j].label)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const CliffPair& a, const CliffPair& b) {
    return std::pair(a.id_a, a.id_b) < std::pair(b.id_a, b.id_b);
  });
  return pairs;
}

std::vector<CliffPair> find_cliff_pairs(const std::vector<MoleculeRecord>& records,
                                        const std::vector<Fingerprint>& fingerprints,
                                        double threshold) {
  const std::int64_t n = static_cast<std::int64_t>(records.size());
  std::vector<std::vector<CliffPair>> per_row(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (records[i].label == records[j].label) continue;
      const double sim = tanimoto(fingerprints[i], fingerprints[j]);
      if (sim > threshold)
        per_row[i].push_back(CliffPair{records[i].id, records[j].id, sim,
                                       static_cast<int>(records[i].label),
                                       static_cast<int>(records[j].label)});
    }
  }
  std::vector<CliffPair> pairs;
  for (auto& row : per_row) pairs.insert(pairs.end(), row.begin(), row.end());
  std::sort(pairs.begin(), pairs.end(), [](const CliffPair& a, const CliffPair& b) {
    return std::pair(a.id_a, a.id_b) < std::pair(b.id_a, b.id_b);
  });
  return pairs;
}

long cliff_accuracy(const std::vector<CliffPair>& pairs, const std::vector<bool>& correctness) {
  long count = 0;
  for (const CliffPair& pair : pairs) {
    if (pair.id_a < 0 || pair.id_b < 0 ||
        pair.id_a >= static_cast<int>(correctness.size()) ||
        pair.id_b >= static_cast<int>(correctness.size()))
      throw EvalError(EvalError::Kind::MissingMember,
                      "pair (" + std::to_string(pair.id_a) + ", " + std::to_string(pair.id_b) +
                          ") outside correctness vector");
    if (correctness[pair.id_a] && correctness[pair.id_b]) ++count;
  }
  return count;
}

}  // namespace treekd
