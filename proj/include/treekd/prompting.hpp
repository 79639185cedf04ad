#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treekd/dataset.hpp"
#include "treekd/errors.hpp"
#include "treekd/forest.hpp"
#include "treekd/pattern.hpp"
#include "treekd/verbalizer.hpp"

namespace treekd {

class PromptError : public Error {
 public:
  enum class Kind { LibraryMismatch, EmptyForest, Io };
  PromptError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

struct PromptSections {
  std::string smiles;
  std::string fg_list;
  std::string rule;
  std::string property_description;
  std::string question;
};

struct Prompt {
  std::string text;
  PromptSections sections;
  int token_budget_hint = 1024;

  // Cheap length flag (roughly 4 bytes per token); prompts are never
  // truncated here, callers decide what to do with oversize ones.
  bool oversize_hint() const { return text.size() > 4u * static_cast<unsigned>(token_budget_hint); }
};

// Assembles the fixed template, sections in order:
//   SMILES: <smiles>
//   Functional groups found: <name (xk), ...> | none
//   Predictive rule:
//   <rule lines verbatim>
//   Property: <description>
//   Question: ... Answer positive or negative. | ... Answer with a number.
Prompt build_prompt(const MoleculeRecord& record, const FeatureVector& features,
                    const RuleText& rule, const FunctionalGroupLibrary& library,
                    const PropertySpec& spec);

struct TrainingExample {
  Prompt prompt;
  std::string target;
  int rule_index = 0;
  std::string property;
};

// Canonical completion text: "positive"/"negative" for classification,
// the label at 4 significant digits for regression.
std::string render_target(double label, TaskKind task);

// One example per record, each carrying the verbalized rule of a forest tree
// drawn uniformly from the stream (seed, record.id). Keying the draw by
// record id makes the result independent of construction order.
std::vector<TrainingExample> build_training_set(const std::vector<MoleculeRecord>& records,
                                                const std::vector<FeatureVector>& features,
                                                RandomForest& forest,
                                                const FunctionalGroupLibrary& library,
                                                const PropertySpec& spec, std::uint64_t seed);

// JSONL lines {"prompt", "completion", "property", "rule_index"}; returns the
// number of lines written.
std::size_t export_jsonl(const std::vector<TrainingExample>& examples, const std::string& path);

struct ImportedExample {
  std::string prompt;
  std::string completion;
  std::string property;
  int rule_index = 0;
};

std::vector<ImportedExample> import_jsonl(const std::string& path);

}  // namespace treekd
