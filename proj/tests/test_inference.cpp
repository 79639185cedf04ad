#include <doctest.h>

#include <atomic>

#include "treekd/inference.hpp"
#include "treekd/numformat.hpp"
#include "treekd/rng.hpp"

using namespace treekd;

namespace {

FunctionalGroupLibrary small_library() {
  return FunctionalGroupLibrary::from_entries(
      {{"carbonyl", "C=O"}, {"hydroxyl", "[OX2H1]"}, {"chloro", "Cl"}, {"amine", "[NX3H2]"}});
}

struct Pipeline {
  FunctionalGroupLibrary library = small_library();
  PropertySpec ames = *find_property("Ames Mutagenicity");
  PropertySpec caco2 = *find_property("Caco-2 Permeability");
  std::vector<MoleculeRecord> records;
  std::vector<FeatureVector> features;
  std::vector<double> labels;
  RandomForest forest;

  explicit Pipeline(TaskKind task, int n_trees = 10) {
    const char* smiles[] = {"CC(=O)O",  "CCO",    "CCl",     "NCC(=O)O", "CC(=O)Cl",
                            "NCCO",     "CCCC",   "OCC(=O)O", "NC(=O)C",  "CC(C)O",
                            "ClCCCl",   "NCCCN",  "OCCO",     "CC(=O)OC", "CCN"};
    for (int i = 0; i < 15; ++i) {
      records.push_back({smiles[i], 0.0, i});
      features.push_back(extract_features(parse_molecule(smiles[i]), library));
    }
    for (int i = 0; i < 15; ++i) {
      const double raw = features[i].at(0) + 2.0 * features[i].at(2) +
                         0.5 * static_cast<double>(i % 3);
      records[i].label = task == TaskKind::Classification ? (raw > 1.0 ? 1.0 : 0.0) : raw;
      labels.push_back(records[i].label);
    }
    forest = fit_forest(features, labels, n_trees, default_params(task), 21);
  }
};

// Test double returning canned texts in call order.
class CannedPredictor final : public Predictor {
 public:
  explicit CannedPredictor(std::vector<std::string> texts) : texts_(std::move(texts)) {}
  std::string complete(const std::string&, const DecodingParams&) override {
    const std::size_t i = next_++;
    return texts_[i % texts_.size()];
  }
  bool concurrent_safe() const override { return false; }

 private:
  std::vector<std::string> texts_;
  std::atomic<std::size_t> next_{0};
};

class FlakyPredictor final : public Predictor {
 public:
  FlakyPredictor(int failures_before_success, std::string text)
      : remaining_(failures_before_success), text_(std::move(text)) {}
  std::string complete(const std::string&, const DecodingParams&) override {
    ++calls;
    if (remaining_-- > 0)
      throw InferenceError(InferenceError::Kind::BackendUnavailable, "synthetic outage");
    return text_;
  }
  int calls = 0;

 private:
  int remaining_;
  std::string text_;
};

RetryPolicy fast_retry() {
  RetryPolicy r;
  r.initial_backoff_ms = 1;
  return r;
}

}  // namespace

TEST_CASE("parse_response classification") {
  CHECK(parse_response("positive", TaskKind::Classification) == 1.0);
  CHECK(parse_response("Negative.", TaskKind::Classification) == 0.0);
  CHECK(parse_response("YES", TaskKind::Classification) == 1.0);
  CHECK(parse_response("the answer is no", TaskKind::Classification) == 0.0);
  CHECK(parse_response("predict positive (p=0.8)", TaskKind::Classification) == 0.8);
  CHECK(parse_response("negative (p=0.25)", TaskKind::Classification) == 0.25);
  // "not" and "yesterday" are not whole-word hits.
  CHECK_FALSE(try_parse_response("nothing to say", TaskKind::Classification).has_value());
  CHECK_FALSE(try_parse_response("inconclusive", TaskKind::Classification).has_value());
  CHECK_THROWS_AS(parse_response("inconclusive", TaskKind::Classification), InferenceError);
  // First whole word wins.
  CHECK(parse_response("negative, not positive", TaskKind::Classification) == 0.0);
}

TEST_CASE("parse_response regression") {
  CHECK(parse_response("The answer is -1.25 approximately", TaskKind::Regression) == -1.25);
  CHECK(parse_response("3", TaskKind::Regression) == 3.0);
  CHECK(parse_response("value: 2.5e-3", TaskKind::Regression) == 2.5e-3);
  CHECK(parse_response("+7.5", TaskKind::Regression) == 7.5);
  CHECK_FALSE(try_parse_response("no digits here", TaskKind::Regression).has_value());
  // Digits embedded in identifiers do not count.
  CHECK(parse_response("CO2 level is 4", TaskKind::Regression) == 4.0);
}

TEST_CASE("stub follows the rule embedded in the prompt") {
  Pipeline p(TaskKind::Classification, 6);
  StubPredictor stub(p.library);
  DecodingParams params;

  for (int i = 0; i < 15; ++i) {
    for (int k = 0; k < p.forest.size(); ++k) {
      const RuleText rule = verbalize_rule(p.forest.trees[k], p.library);
      const Prompt prompt = build_prompt(p.records[i], p.features[i], rule, p.library, p.ames);
      const std::string text = stub.complete(prompt.text, params);
      const double parsed = parse_response(text, TaskKind::Classification);
      REQUIRE(parsed == predict_tree(p.forest.trees[k], p.features[i]));
    }
  }
}

TEST_CASE("stub handles the none FG section") {
  Pipeline p(TaskKind::Classification, 4);
  StubPredictor stub(p.library);
  const MoleculeRecord methane{"C", 0.0, 99};
  const FeatureVector none = extract_features(parse_molecule("C"), p.library);
  const RuleText rule = verbalize_rule(p.forest.trees[0], p.library);
  const Prompt prompt = build_prompt(methane, none, rule, p.library, p.ames);
  const std::string text = stub.complete(prompt.text, DecodingParams{});
  CHECK(parse_response(text, TaskKind::Classification) ==
        predict_tree(p.forest.trees[0], none));
}

TEST_CASE("stub is deterministic and rejects malformed prompts") {
  Pipeline p(TaskKind::Classification, 4);
  StubPredictor stub(p.library);
  const RuleText rule = verbalize_rule(p.forest.trees[0], p.library);
  const Prompt prompt = build_prompt(p.records[0], p.features[0], rule, p.library, p.ames);
  CHECK(stub.complete(prompt.text, DecodingParams{}) ==
        stub.complete(prompt.text, DecodingParams{}));

  CHECK_THROWS_AS(stub.complete("SMILES: C\nQuestion: what?", DecodingParams{}), RuleError);
  CHECK_THROWS_AS(stub.complete("Functional groups found: none\nQuestion: what?",
                                DecodingParams{}),
                  RuleError);
}

TEST_CASE("rule consistency with the stub equals predict_forest") {
  for (const TaskKind task : {TaskKind::Classification, TaskKind::Regression}) {
    Pipeline p(task, 10);
    StubPredictor stub(p.library);
    const PropertySpec& spec = task == TaskKind::Classification ? p.ames : p.caco2;
    for (int i = 0; i < 15; ++i) {
      const EnsemblePrediction ep =
          rule_consistency(p.records[i], p.features[i], p.forest, p.library, spec, stub,
                           DecodingParams{}, p.forest.size());
      REQUIRE(ep.value == predict_forest(p.forest, p.features[i]));
      CHECK(ep.failures == 0);
      CHECK(ep.n == p.forest.size());
      CHECK(static_cast<int>(ep.members.size()) == p.forest.size());
    }
  }
}

TEST_CASE("rule consistency with n=1 is the single member") {
  Pipeline p(TaskKind::Classification, 5);
  StubPredictor stub(p.library);
  const EnsemblePrediction ep = rule_consistency(p.records[0], p.features[0], p.forest,
                                                 p.library, p.ames, stub, DecodingParams{}, 1);
  REQUIRE(ep.members.size() == 1);
  CHECK(ep.value == ep.members[0].parsed);
  CHECK(ep.value == predict_tree(p.forest.trees[0], p.features[0]));
}

TEST_CASE("ensemble n must not exceed forest size") {
  Pipeline p(TaskKind::Classification, 3);
  StubPredictor stub(p.library);
  CHECK_THROWS_AS(rule_consistency(p.records[0], p.features[0], p.forest, p.library, p.ames,
                                   stub, DecodingParams{}, 4),
                  InferenceError);
}

TEST_CASE("unparseable members are dropped and counted") {
  Pipeline p(TaskKind::Classification, 4);
  CannedPredictor canned({"positive (p=0.5)", "gibberish", "positive (p=0.7)", "???"});
  const EnsemblePrediction ep = rule_consistency(p.records[0], p.features[0], p.forest,
                                                 p.library, p.ames, canned, DecodingParams{}, 4);
  CHECK(ep.failures == 2);
  CHECK(ep.members.size() == 2);
  CHECK(ep.n == 4);
  CHECK(ep.value == doctest::Approx(0.6));

  CannedPredictor hopeless({"???"});
  CHECK_THROWS_AS(rule_consistency(p.records[0], p.features[0], p.forest, p.library, p.ames,
                                   hopeless, DecodingParams{}, 4),
                  InferenceError);
}

TEST_CASE("transient backend errors are retried") {
  Pipeline p(TaskKind::Classification, 1);
  FlakyPredictor twice(2, "positive (p=0.5)");
  const EnsemblePrediction ep = rule_consistency(p.records[0], p.features[0], p.forest,
                                                 p.library, p.ames, twice, DecodingParams{}, 1,
                                                 fast_retry());
  CHECK(ep.value == 0.5);
  CHECK(twice.calls == 3);

  FlakyPredictor always(100, "positive");
  CHECK_THROWS_AS(rule_consistency(p.records[0], p.features[0], p.forest, p.library, p.ames,
                                   always, DecodingParams{}, 1, fast_retry()),
                  InferenceError);
  CHECK(always.calls == 3);  // bounded attempts
}

TEST_CASE("self consistency requires positive temperature") {
  Pipeline p(TaskKind::Classification, 2);
  StubPredictor stub(p.library);
  const RuleText rule = verbalize_rule(p.forest.trees[0], p.library);
  const Prompt prompt = build_prompt(p.records[0], p.features[0], rule, p.library, p.ames);
  CHECK_THROWS_AS(self_consistency(prompt, stub, DecodingParams{}, 3, TaskKind::Classification),
                  InferenceError);

  DecodingParams sampling;
  sampling.temperature = 0.7;
  const EnsemblePrediction ep =
      self_consistency(prompt, stub, sampling, 3, TaskKind::Classification);
  // The stub ignores temperature, so all members agree.
  CHECK(ep.members.size() == 3);
  CHECK(ep.value == ep.members[0].parsed);
}

TEST_CASE("self consistency averages canned members") {
  Pipeline p(TaskKind::Regression, 2);
  CannedPredictor canned({"0.2", "0.4", "0.6"});
  const RuleText rule = verbalize_rule(p.forest.trees[0], p.library);
  const Prompt prompt = build_prompt(p.records[0], p.features[0], rule, p.library, p.caco2);
  DecodingParams sampling;
  sampling.temperature = 1.0;
  const EnsemblePrediction ep = self_consistency(prompt, canned, sampling, 3, TaskKind::Regression);
  CHECK(ep.value == doctest::Approx(0.4));
  CHECK(ep.n == 3);

  const EnsemblePrediction single =
      self_consistency(prompt, canned, sampling, 1, TaskKind::Regression);
  CHECK(single.members.size() == 1);
}

TEST_CASE("batch rule consistency equals the per-record loop") {
  Pipeline p(TaskKind::Classification, 8);
  StubPredictor stub(p.library);
  const auto batch = rule_consistency_batch(p.records, p.features, p.forest, p.library, p.ames,
                                            stub, DecodingParams{}, 8, fast_retry(), 4);
  REQUIRE(batch.size() == p.records.size());
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    const EnsemblePrediction one = rule_consistency(p.records[i], p.features[i], p.forest,
                                                    p.library, p.ames, stub, DecodingParams{}, 8);
    CHECK(batch[i].value == one.value);
    CHECK(batch[i].failures == one.failures);
    CHECK(batch[i].n == one.n);
  }
}

TEST_CASE("ensemble value is invariant to member order") {
  std::vector<double> values{0.31, 0.07, 0.99, 0.55, 0.21};
  const double mean = ensemble_mean(values);
  std::vector<double> shuffled{0.99, 0.21, 0.31, 0.55, 0.07};
  CHECK(ensemble_mean(shuffled) == mean);
}

TEST_CASE("rendered targets parse back to the label") {
  CHECK(parse_response(render_target(1.0, TaskKind::Classification), TaskKind::Classification) ==
        1.0);
  CHECK(parse_response(render_target(0.0, TaskKind::Classification), TaskKind::Classification) ==
        0.0);
  Rng rng(64);
  for (int i = 0; i < 200; ++i) {
    const double label = (static_cast<double>(rng.next_below(1u << 20)) / 523.0) - 1000.0;
    const std::string target = render_target(label, TaskKind::Regression);
    CHECK(parse_response(target, TaskKind::Regression) == round_sig4(label));
  }
}

TEST_CASE("http predictor surfaces unreachable backends") {
  HttpPredictorConfig config;
  config.endpoint = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens here
  config.model = "m";
  config.timeout_seconds = 1;
  HttpPredictor predictor(config);
  try {
    predictor.complete("hello", DecodingParams{});
    FAIL("expected an error");
  } catch (const InferenceError& e) {
    CHECK((e.kind == InferenceError::Kind::BackendUnavailable ||
           e.kind == InferenceError::Kind::Timeout));
  }
}
