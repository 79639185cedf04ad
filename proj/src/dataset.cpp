#include "treekd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "treekd/descriptors.hpp"
#include "treekd/molgraph.hpp"
#include "treekd/rng.hpp"

namespace treekd {

std::string to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::MAE: return "MAE";
    case MetricKind::AUROC: return "AUROC";
    case MetricKind::AUPRC: return "AUPRC";
    case MetricKind::Spearman: return "Spearman";
  }
  return "";
}

namespace {

PropertySpec make(std::string name, std::string category, TaskKind task, MetricKind metric,
                  std::string description) {
  PropertySpec spec;
  spec.name = std::move(name);
  spec.category = std::move(category);
  spec.task = task;
  spec.metric = metric;
  spec.higher_is_better = metric != MetricKind::MAE;
  spec.description = std::move(description);
  return spec;
}

const char* kCyp2d6 =
    "The CYP P450 genes are involved in the formation and breakdown (metabolism) of various "
    "molecules and chemicals within cells. Specifically, CYP2D6 is primarily expressed in the "
    "liver. It is also highly expressed in areas of the central nervous system, including the "
    "substantia nigra.";
const char* kCyp3a4 =
    "The CYP P450 genes are involved in the formation and breakdown (metabolism) of various "
    "molecules and chemicals within cells. Specifically, CYP3A4 is an important enzyme in the "
    "body, mainly found in the liver and in the intestine. It oxidizes small foreign organic "
    "molecules (xenobiotics), such as toxins or drugs, so that they can be removed from the "
    "body.";
const char* kCyp2c9 =
    "The CYP P450 genes are involved in the formation and breakdown (metabolism) of various "
    "molecules and chemicals within cells. Specifically, the CYP P450 2C9 plays a major role in "
    "the oxidation of both xenobiotic and endogenous compounds.";
const char* kSubstrateSuffix = " Substrates are drugs that are metabolized by the enzyme.";
const char* kClearance =
    "Drug clearance is defined as the volume of plasma cleared of a drug over a specified time "
    "period and it measures the rate at which the active drug is removed from the body.";

std::vector<PropertySpec> build_registry() {
  std::vector<PropertySpec> r;
  r.push_back(make(
      "Caco-2 Permeability", "Absorption", TaskKind::Regression, MetricKind::MAE,
      "The human colon epithelial cancer cell line, Caco-2, is used as an in vitro model to "
      "simulate the human intestinal tissue. The experimental result on the rate of drug passing "
      "through the Caco-2 cells can approximate the rate at which the drug permeates through the "
      "human intestinal tissue."));
  r.push_back(make(
      "HIA", "Absorption", TaskKind::Classification, MetricKind::AUROC,
      "When a drug is orally administered, it needs to be absorbed from the human "
      "gastrointestinal system into the bloodstream of the human body. This ability of "
      "absorption is called human intestinal absorption (HIA) and it is crucial for a drug to "
      "be delivered to the target."));
  r.push_back(make(
      "Pgp Inhibition", "Absorption", TaskKind::Classification, MetricKind::AUROC,
      "P-glycoprotein (Pgp) is an ABC transporter protein involved in intestinal absorption, "
      "drug metabolism, and brain penetration, and its inhibition can seriously alter a drug's "
      "bioavailability and safety. In addition, inhibitors of Pgp can be used to overcome "
      "multidrug resistance."));
  r.push_back(make(
      "Bioavailability", "Absorption", TaskKind::Classification, MetricKind::AUROC,
      "Oral bioavailability is defined as “the rate and extent to which the active "
      "ingredient or active moiety is absorbed from a drug product and becomes available at the "
      "site of action”."));
  r.push_back(make(
      "Lipophilicity", "Absorption", TaskKind::Regression, MetricKind::MAE,
      "Lipophilicity measures the ability of a drug to dissolve in a lipid (e.g. fats, oils) "
      "environment. High lipophilicity often leads to high rate of metabolism, poor solubility, "
      "high turn-over, and low absorption."));
  r.push_back(make(
      "Solubility", "Absorption", TaskKind::Regression, MetricKind::MAE,
      "Aqeuous solubility measures a drug's ability to dissolve in water. Poor water solubility "
      "could lead to slow drug absorptions, inadequate bioavailablity and even induce toxicity. "
      "More than 40% of new chemical entities are not soluble."));
  r.push_back(make(
      "BBB", "Distribution", TaskKind::Classification, MetricKind::AUROC,
      "As a membrane separating circulating blood and brain extracellular fluid, the "
      "blood-brain barrier (BBB) is the protection layer that blocks most foreign drugs. Thus "
      "the ability of a drug to penetrate the barrier to deliver to the site of action forms a "
      "crucial challenge in development of drugs for central nervous system."));
  r.push_back(make(
      "PPBR", "Distribution", TaskKind::Regression, MetricKind::MAE,
      "The human plasma protein binding rate (PPBR) is expressed as the percentage of a drug "
      "bound to plasma proteins in the blood. This rate strongly affect a drug's efficiency of "
      "delivery. The less bound a drug is, the more efficiently it can traverse and diffuse to "
      "the site of actions."));
  r.push_back(make(
      "VDss", "Distribution", TaskKind::Regression, MetricKind::Spearman,
      "The volume of distribution at steady state (VDss) measures the degree of a drug's "
      "concentration in body tissue compared to concentration in blood. Higher VD indicates a "
      "higher distribution in the tissue and usually indicates the drug with high lipid "
      "solubility, low plasma protein binding rate."));
  r.push_back(make("CYP2D6 Inhibition", "Metabolism", TaskKind::Classification,
                   MetricKind::AUPRC, kCyp2d6));
  r.push_back(make("CYP3A4 Inhibition", "Metabolism", TaskKind::Classification,
                   MetricKind::AUPRC, kCyp3a4));
  r.push_back(make("CYP2C9 Inhibition", "Metabolism", TaskKind::Classification,
                   MetricKind::AUPRC, kCyp2c9));
  r.push_back(make("CYP2D6 Substrate", "Metabolism", TaskKind::Classification, MetricKind::AUPRC,
                   std::string(kCyp2d6) + kSubstrateSuffix));
  r.push_back(make("CYP3A4 Substrate", "Metabolism", TaskKind::Classification, MetricKind::AUPRC,
                   std::string(kCyp3a4) + kSubstrateSuffix));
  r.push_back(make("CYP2C9 Substrate", "Metabolism", TaskKind::Classification, MetricKind::AUPRC,
                   std::string(kCyp2c9) + kSubstrateSuffix));
  r.push_back(make(
      "Half Life", "Excretion", TaskKind::Regression, MetricKind::Spearman,
      "Half life of a drug is the duration for the concentration of the drug in the body to be "
      "reduced by half. It measures the duration of actions of a drug."));
  r.push_back(make("Clearance Microsome", "Excretion", TaskKind::Regression,
                   MetricKind::Spearman, kClearance));
  r.push_back(make("Clearance Hepatocyte", "Excretion", TaskKind::Regression,
                   MetricKind::Spearman, kClearance));
  r.push_back(make(
      "hERG", "Toxicity", TaskKind::Classification, MetricKind::AUROC,
      "Human ether-à-go-go related gene (hERG) is crucial for the coordination of the "
      "heart's beating. Thus, if a drug blocks the hERG, it could lead to severe adverse "
      "effects. Therefore, reliable prediction of hERG liability in the early stages of drug "
      "design is quite important to reduce the risk of cardiotoxicity-related attritions in the "
      "later development stages."));
  r.push_back(make(
      "Ames Mutagenicity", "Toxicity", TaskKind::Classification, MetricKind::AUROC,
      "Mutagenicity means the ability of a drug to induce genetic alterations. Drugs that can "
      "cause damage to the DNA can result in cell death or other severe adverse effects. "
      "Nowadays, the most widely used assay for testing the mutagenicity of compounds is the "
      "Ames experiment which was invented by a professor named Ames. The Ames test is a "
      "short-term bacterial reverse mutation assay detecting a large number of compounds which "
      "can induce genetic damage and frameshift mutations."));
  r.push_back(make(
      "DILI", "Toxicity", TaskKind::Classification, MetricKind::AUROC,
      "Drug-induced liver injury (DILI) is fatal liver disease caused by drugs and it has been "
      "the single most frequent cause of safety-related drug marketing withdrawals for the past "
      "50 years (e.g. iproniazid, ticrynafen, benoxaprofen)."));
  r.push_back(make(
      "LD50", "Toxicity", TaskKind::Regression, MetricKind::MAE,
      "Acute toxicity LD50 measures the most conservative dose that can lead to lethal adverse "
      "effects. The lower the dose, the more lethal of a drug."));
  return r;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Minimal RFC 4180 row split: quoted fields with "" escapes.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

const std::vector<PropertySpec>& registry() {
  static const std::vector<PropertySpec> r = build_registry();
  return r;
}

const PropertySpec* find_property(const std::string& name) {
  for (const PropertySpec& spec : registry())
    if (spec.name == name) return &spec;
  return nullptr;
}

LoadResult load_dataset(const std::string& path, const PropertySpec& spec) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "cannot open dataset '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw DatasetError(DatasetError::Kind::EmptyDataset, "dataset '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  int smiles_col = -1, label_col = -1;
  const auto header = split_csv_row(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "smiles") smiles_col = static_cast<int>(i);
    if (h == "label") label_col = static_cast<int>(i);
  }
  if (smiles_col < 0)
    throw DatasetError(DatasetError::Kind::MissingColumn, path + ": no 'smiles' column");
  if (label_col < 0)
    throw DatasetError(DatasetError::Kind::MissingColumn, path + ": no 'label' column");

  LoadResult result;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (static_cast<int>(fields.size()) <= std::max(smiles_col, label_col))
      throw DatasetError(DatasetError::Kind::Io,
                         path + ":" + std::to_string(lineno) + ": too few columns");

    const std::string& smiles = fields[smiles_col];
    const std::string& label_text = fields[label_col];
    std::size_t consumed = 0;
    double label = 0.0;
    try {
      label = std::stod(label_text, &consumed);
    } catch (const std::exception&) {
      throw DatasetError(DatasetError::Kind::BadLabel,
                         path + ":" + std::to_string(lineno) + ": bad label '" + label_text + "'");
    }
    if (consumed != label_text.size() || !std::isfinite(label))
      throw DatasetError(DatasetError::Kind::BadLabel,
                         path + ":" + std::to_string(lineno) + ": bad label '" + label_text + "'");
    if (spec.task == TaskKind::Classification && label != 0.0 && label != 1.0)
      throw DatasetError(DatasetError::Kind::BadLabel,
                         path + ":" + std::to_string(lineno) +
                             ": classification label must be 0 or 1, got '" + label_text + "'");

    try {
      parse_smiles(smiles);
    } catch (const SmilesError&) {
      ++result.skipped;
      continue;
    }
    MoleculeRecord rec;
    rec.smiles = smiles;
    rec.label = label;
    rec.id = static_cast<int>(result.records.size());
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty())
    throw DatasetError(DatasetError::Kind::EmptyDataset, path + ": no valid rows");
  return result;
}

void save_dataset(const std::string& path, const std::vector<MoleculeRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "cannot write '" + path + "'");
  out << "smiles,label\n";
  for (const MoleculeRecord& rec : records) {
    nlohmann::json label = rec.label;  // shortest round-trip rendering
    out << rec.smiles << ',' << label.dump() << '\n';
  }
}

DatasetSplit scaffold_split(const std::vector<MoleculeRecord>& records,
                            const std::vector<double>& ratios, std::uint64_t seed,
                            bool shuffle_ties) {
  if (ratios.size() != 3)
    throw DatasetError(DatasetError::Kind::RatioError, "expected 3 split ratios");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0))
      throw DatasetError(DatasetError::Kind::RatioError, "split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DatasetError(DatasetError::Kind::RatioError, "split ratios must sum to 1");

  std::map<ScaffoldKey, std::vector<int>> by_scaffold;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Molecule mol = parse_molecule(records[i].smiles);
    by_scaffold[murcko_scaffold(mol)].push_back(static_cast<int>(i));
  }

  struct Group {
    ScaffoldKey key;
    std::vector<int> members;
  };
  std::vector<Group> groups;
  groups.reserve(by_scaffold.size());
  for (auto& [key, members] : by_scaffold) groups.push_back(Group{key, std::move(members)});
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.key < b.key;
  });

  if (shuffle_ties) {
    Rng rng(seed);
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= groups.size(); ++i) {
      if (i == groups.size() ||
          groups[i].members.size() != groups[run_start].members.size()) {
        for (std::size_t j = i - 1; j > run_start; --j) {
          const std::size_t k = run_start + rng.next_below(j - run_start + 1);
          std::swap(groups[j], groups[k]);
        }
        run_start = i;
      }
    }
  }

  const double n = static_cast<double>(records.size());
  const double train_target = ratios[0] * n;
  const double valid_target = ratios[1] * n;

  DatasetSplit split;
  split.ratios = ratios;
  split.seed = seed;
  double train_count = 0, valid_count = 0;
  for (const Group& group : groups) {
    std::vector<MoleculeRecord>* part;
    if (train_count < train_target) {
      part = &split.train;
      train_count += static_cast<double>(group.members.size());
    } else if (valid_count < valid_target) {
      part = &split.valid;
      valid_count += static_cast<double>(group.members.size());
    } else {
      part = &split.test;
    }
    for (int idx : group.members) part->push_back(records[idx]);
  }
  // Keep each part in stable record order.
  const auto by_id = [](const MoleculeRecord& a, const MoleculeRecord& b) { return a.id < b.id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.valid.begin(), split.valid.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

std::string split_manifest_json(const DatasetSplit& split) {
  nlohmann::json j;
  auto ids = [](const std::vector<MoleculeRecord>& part) {
    std::vector<int> out;
    out.reserve(part.size());
    for (const MoleculeRecord& rec : part) out.push_back(rec.id);
    return out;
  };
  j["train"] = ids(split.train);
  j["valid"] = ids(split.valid);
  j["test"] = ids(split.test);
  j["ratios"] = split.ratios;
  j["scaffold_algo"] = "murcko-wl3";
  return j.dump(2);
}

}  // namespace treekd
