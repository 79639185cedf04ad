#include "treekd/prompting.hpp"

#include <fstream>

#include <json.hpp>

#include "treekd/numformat.hpp"
#include "treekd/rng.hpp"

namespace treekd {

Prompt build_prompt(const MoleculeRecord& record, const FeatureVector& features,
                    const RuleText& rule, const FunctionalGroupLibrary& library,
                    const PropertySpec& spec) {
  if (features.dimension != library.size())
    throw PromptError(PromptError::Kind::LibraryMismatch,
                      "features have dimension " + std::to_string(features.dimension) +
                          " but library has " + std::to_string(library.size()) + " entries");

  Prompt prompt;
  prompt.sections.smiles = record.smiles;

  std::string fg_list;
  for (const auto& [name, count] : found_fg_names(features, library)) {
    if (!fg_list.empty()) fg_list += ", ";
    fg_list += name + " (x" + std::to_string(count) + ")";
  }
  if (fg_list.empty()) fg_list = "none";
  prompt.sections.fg_list = fg_list;
  prompt.sections.rule = rule.str();
  prompt.sections.property_description = spec.description;
  prompt.sections.question =
      spec.task == TaskKind::Classification
          ? "Is this molecule positive for " + spec.name + "? Answer positive or negative."
          : "What is the " + spec.name + " value of this molecule? Answer with a number.";

  prompt.text = "SMILES: " + prompt.sections.smiles + "\n" +
                "Functional groups found: " + prompt.sections.fg_list + "\n" +
                "Predictive rule:\n" + prompt.sections.rule + "\n" +
                "Property: " + prompt.sections.property_description + "\n" +
                "Question: " + prompt.sections.question;
  return prompt;
}

std::string render_target(double label, TaskKind task) {
  if (task == TaskKind::Classification) return label != 0.0 ? "positive" : "negative";
  return format_sig4(label);
}

std::vector<TrainingExample> build_training_set(const std::vector<MoleculeRecord>& records,
                                                const std::vector<FeatureVector>& features,
                                                RandomForest& forest,
                                                const FunctionalGroupLibrary& library,
                                                const PropertySpec& spec, std::uint64_t seed) {
  if (forest.trees.empty())
    throw PromptError(PromptError::Kind::EmptyForest, "forest has no trees");
  if (records.size() != features.size())
    throw PromptError(PromptError::Kind::LibraryMismatch,
                      "records and features have different lengths");

  // Verbalize each tree once; rules are reused across records.
  std::vector<RuleText> rules;
  rules.reserve(forest.trees.size());
  for (DecisionTree& tree : forest.trees) rules.push_back(verbalize_rule(tree, library));

  std::vector<TrainingExample> examples;
  examples.reserve(records.size());
  const std::uint64_t n_trees = static_cast<std::uint64_t>(forest.trees.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(records[i].id)));
    const int rule_index = static_cast<int>(rng.next_below(n_trees));
    TrainingExample ex;
    ex.prompt = build_prompt(records[i], features[i], rules[rule_index], library, spec);
    ex.target = render_target(records[i].label, spec.task);
    ex.rule_index = rule_index;
    ex.property = spec.name;
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::size_t export_jsonl(const std::vector<TrainingExample>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PromptError(PromptError::Kind::Io, "cannot write '" + path + "'");
  for (const TrainingExample& ex : examples) {
    nlohmann::json j;
    j["prompt"] = ex.prompt.text;
    j["completion"] = ex.target;
    j["property"] = ex.property;
    j["rule_index"] = ex.rule_index;
    out << j.dump() << '\n';
  }
  if (!out) throw PromptError(PromptError::Kind::Io, "write to '" + path + "' failed");
  return examples.size();
}

std::vector<ImportedExample> import_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError(PromptError::Kind::Io, "cannot read '" + path + "'");
  std::vector<ImportedExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw PromptError(PromptError::Kind::Io,
                        path + ": bad JSONL line: " + std::string(e.what()));
    }
    ImportedExample ex;
    ex.prompt = j.at("prompt").get<std::string>();
    ex.completion = j.at("completion").get<std::string>();
    ex.property = j.at("property").get<std::string>();
    ex.rule_index = j.at("rule_index").get<int>();
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace treekd
