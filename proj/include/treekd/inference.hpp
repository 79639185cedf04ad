#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treekd/dataset.hpp"
#include "treekd/errors.hpp"
#include "treekd/forest.hpp"
#include "treekd/pattern.hpp"
#include "treekd/prompting.hpp"

namespace treekd {

class InferenceError : public Error {
 public:
  enum class Kind { BackendUnavailable, Timeout, Unparseable, AllMembersFailed, BadConfig };
  InferenceError(Kind k, const std::string& what) : Error(what), kind(k) {}
  Kind kind;
};

struct DecodingParams {
  double temperature = 0.0;
  int max_new_tokens = 64;
  std::optional<std::uint64_t> sample_seed;
};

// Pluggable text-completion backend. Implementations must be deterministic
// at temperature 0 with a fixed sample_seed (the stub guarantees this,
// remote backends are best-effort). concurrent_safe() declares whether
// complete() may be called from several threads at once.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
  virtual bool concurrent_safe() const { return false; }
};

// Closed-loop verification predictor: reads the FG section and the rule
// section back out of the prompt, executes the rule exactly, and answers in
// the canonical target format. Throws RuleError(GrammarError) on prompts
// that do not follow the template.
std::string stub_oracle_complete(const std::string& prompt, const DecodingParams& params,
                                 const FunctionalGroupLibrary& library);

class StubPredictor final : public Predictor {
 public:
  explicit StubPredictor(const FunctionalGroupLibrary& library) : library_(&library) {}
  std::string complete(const std::string& prompt, const DecodingParams& params) override {
    return stub_oracle_complete(prompt, params, *library_);
  }
  bool concurrent_safe() const override { return true; }

 private:
  const FunctionalGroupLibrary* library_;
};

struct HttpPredictorConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;  // empty = no Authorization header
  int timeout_seconds = 60;
};

// Chat-completions client: POSTs {"model", "messages", "temperature",
// "max_tokens", "seed"} and reads the first choice's message content.
class HttpPredictor final : public Predictor {
 public:
  explicit HttpPredictor(HttpPredictorConfig config) : config_(std::move(config)) {}
  std::string complete(const std::string& prompt, const DecodingParams& params) override;
  bool concurrent_safe() const override { return true; }

 private:
  HttpPredictorConfig config_;
};

// Classification: case-insensitive whole-word scan for positive/negative/
// yes/no, first hit wins (1.0/0.0); a `p=<frac>` fragment overrides the hard
// label. Regression: first decimal-number token.
std::optional<double> try_parse_response(const std::string& text, TaskKind task);
double parse_response(const std::string& text, TaskKind task);  // throws Unparseable

struct Prediction {
  std::string raw_text;
  double parsed = 0.0;
  int member_index = 0;
};

struct EnsemblePrediction {
  double value = 0.0;  // mean of parsed members
  std::vector<Prediction> members;
  int n = 0;  // |members| + failures
  int failures = 0;
};

struct RetryPolicy {
  int attempts = 3;
  int initial_backoff_ms = 100;  // doubles per retry
};

// Rule-consistency: one prompt per forest tree (trees 0..n-1), each carrying
// that tree's verbalized rule; the prediction is the mean of the parsed
// member values. Unparseable members are dropped and counted; backend errors
// are retried per policy, then propagated. Throws AllMembersFailed when
// nothing parses.
EnsemblePrediction rule_consistency(const MoleculeRecord& record, const FeatureVector& features,
                                    RandomForest& forest, const FunctionalGroupLibrary& library,
                                    const PropertySpec& spec, Predictor& predictor,
                                    const DecodingParams& params, int ensemble_n,
                                    const RetryPolicy& retry = {});

// Self-consistency: n samples from one identical prompt, sample_seed varied
// as base+k. Requires temperature > 0.
EnsemblePrediction self_consistency(const Prompt& prompt, Predictor& predictor,
                                    const DecodingParams& params, int n, TaskKind task,
                                    const RetryPolicy& retry = {});

// Batch rule-consistency over records. The outer loop runs per tree so
// requests sharing a rule prefix stay grouped; within a tree, requests fan
// out across up to `concurrency` threads when the predictor allows it.
// Identical to looping rule_consistency over records.
std::vector<EnsemblePrediction> rule_consistency_batch(
    const std::vector<MoleculeRecord>& records, const std::vector<FeatureVector>& features,
    RandomForest& forest, const FunctionalGroupLibrary& library, const PropertySpec& spec,
    Predictor& predictor, const DecodingParams& params, int ensemble_n,
    const RetryPolicy& retry = {}, int concurrency = 8);

}  // namespace treekd
