#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treekd/errors.hpp"
#include "treekd/task.hpp"

namespace treekd {

enum class MetricKind { MAE, AUROC, AUPRC, Spearman };

std::string to_string(MetricKind metric);

struct PropertySpec {
  std::string name;
  std::string category;  // Absorption | Distribution | Metabolism | Excretion | Toxicity
  TaskKind task = TaskKind::Classification;
  MetricKind metric = MetricKind::AUROC;
  bool higher_is_better = true;
  std::string description;
};

// The 22 ADMET benchmark properties with their metrics and prose
// descriptions.
const std::vector<PropertySpec>& registry();

// nullptr when the name is unknown.
const PropertySpec* find_property(const std::string& name);

struct MoleculeRecord {
  std::string smiles;
  double label = 0.0;
  int id = 0;
};

class DatasetError : public Error {
 public:
  enum class Kind { MissingColumn, EmptyDataset, BadLabel, RatioError, Io };
  DatasetError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

struct LoadResult {
  std::vector<MoleculeRecord> records;
  int skipped = 0;  // rows dropped because the SMILES failed to parse
};

// CSV with a header row containing "smiles" and "label" columns
// (case-insensitive, extra columns ignored). Rows whose SMILES fails to
// parse are dropped and tallied; classification labels must be 0 or 1.
LoadResult load_dataset(const std::string& path, const PropertySpec& spec);

// Writes "smiles,label" rows; inverse of load_dataset on clean data.
void save_dataset(const std::string& path, const std::vector<MoleculeRecord>& records);

struct DatasetSplit {
  std::vector<MoleculeRecord> train, valid, test;
  std::vector<double> ratios;
  std::uint64_t seed = 0;
};

// Deterministic scaffold split: records are grouped by Murcko scaffold key,
// groups sorted by (size descending, hash ascending) and assigned whole to
// train until it reaches train_frac * n, then valid, then test. The seed only
// matters when shuffle_ties is set, which shuffles runs of equal-size groups.
DatasetSplit scaffold_split(const std::vector<MoleculeRecord>& records,
                            const std::vector<double>& ratios = {0.7, 0.1, 0.2},
                            std::uint64_t seed = 0, bool shuffle_ties = false);

// JSON manifest {"train": [...ids], "valid": ..., "test": ..., "ratios": ...,
// "scaffold_algo": "murcko-wl3"}.
std::string split_manifest_json(const DatasetSplit& split);

}  // namespace treekd
