#include "treekd/cli.hpp"

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "treekd/eval.hpp"
#include "treekd/inference.hpp"
#include "treekd/prompting.hpp"
#include "treekd/verbalizer.hpp"

namespace fs = std::filesystem;

namespace treekd {

namespace {

std::string interpolate_env(const std::string& value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const auto open = value.find("${", pos);
    if (open == std::string::npos) {
      out += value.substr(pos);
      break;
    }
    const auto close = value.find('}', open + 2);
    if (close == std::string::npos)
      throw ConfigError("unterminated ${...} in config value '" + value + "'");
    out += value.substr(pos, open - pos);
    const std::string name = value.substr(open + 2, close - open - 2);
    const char* env = std::getenv(name.c_str());
    out += env ? env : "";
    pos = close + 1;
  }
  return out;
}

std::string get_string(const nlohmann::json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  return interpolate_env(j.at(key).get<std::string>());
}

std::string resolve(const fs::path& base, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (base / p).lexically_normal().string();
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path))
    throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

struct PipelineContext {
  FunctionalGroupLibrary library;
  PropertySpec spec;
  std::vector<MoleculeRecord> records;
  int skipped = 0;
  std::vector<Molecule> molecules;
  std::vector<FeatureVector> features;
  DatasetSplit split;
};

PipelineContext load_pipeline(const RunConfig& config) {
  PipelineContext ctx;
  ctx.library = FunctionalGroupLibrary::load_tsv(config.library_path);

  const PropertySpec* spec = find_property(config.property_name);
  if (spec == nullptr)
    throw ConfigError("unknown property '" + config.property_name + "'");
  ctx.spec = *spec;

  LoadResult loaded = load_dataset(config.dataset_path, ctx.spec);
  ctx.records = std::move(loaded.records);
  ctx.skipped = loaded.skipped;

  ctx.molecules.reserve(ctx.records.size());
  for (const MoleculeRecord& rec : ctx.records) ctx.molecules.push_back(parse_molecule(rec.smiles));
  ctx.features = extract_features_batch(ctx.molecules, ctx.library);
  ctx.split = scaffold_split(ctx.records, config.split.ratios, config.split.seed,
                             config.split.shuffle_ties);
  return ctx;
}

TreeParams tree_params_from(const RunConfig& config, TaskKind task, MaxFeaturesPolicy policy) {
  TreeParams p;
  p.max_depth = config.forest.max_depth;
  p.min_samples_split = config.forest.min_samples_split;
  p.min_samples_leaf = config.forest.min_samples_leaf;
  p.task = task;
  p.max_features = policy;
  return p;
}

// Gathers the feature vectors and labels of one split part; features are
// indexed by record id (ids are file order).
void gather_part(const PipelineContext& ctx, const std::vector<MoleculeRecord>& part,
                 std::vector<FeatureVector>& X, std::vector<double>& y) {
  X.clear();
  y.clear();
  for (const MoleculeRecord& rec : part) {
    X.push_back(ctx.features[rec.id]);
    y.push_back(rec.label);
  }
}

fs::path ensure_output_dir(const RunConfig& config) {
  fs::path dir(config.output_dir);
  fs::create_directories(dir);
  return dir;
}

RandomForest load_forest_artifact(const RunConfig& config, const FunctionalGroupLibrary& library) {
  const fs::path path = fs::path(config.output_dir) / "forest.json";
  if (!fs::exists(path))
    throw ConfigError("no forest model at '" + path.string() + "'; run train first");
  return forest_from_json(read_file(path.string()), &library);
}

DecisionTree load_tree_artifact(const RunConfig& config) {
  const fs::path path = fs::path(config.output_dir) / "tree.json";
  if (!fs::exists(path))
    throw ConfigError("no specialist tree at '" + path.string() + "'; run train first");
  return tree_from_json(read_file(path.string()));
}

std::unique_ptr<Predictor> make_predictor(const RunConfig& config,
                                          const FunctionalGroupLibrary& library) {
  if (config.predictor.kind == "stub")
    return std::make_unique<StubPredictor>(library);
  HttpPredictorConfig http;
  http.endpoint = config.predictor.endpoint;
  http.model = config.predictor.model;
  http.timeout_seconds = config.predictor.timeout_seconds;
  if (const char* key = std::getenv(config.predictor.api_key_env.c_str())) http.api_key = key;
  return std::make_unique<HttpPredictor>(http);
}

std::string metric_table(const std::vector<std::array<std::string, 4>>& rows) {
  std::array<std::size_t, 4> width = {8, 6, 5, 1};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  const std::array<std::string, 4> header = {"Property", "Metric", "Value", "n"};
  auto emit_row = [&](const std::array<std::string, 4>& row) {
    for (std::size_t c = 0; c < 4; ++c) {
      out << row[c];
      if (c + 1 < 4) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  };
  emit_row(header);
  for (const auto& row : rows) emit_row(row);
  return out.str();
}

std::string format_metric_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  require_file(path, "config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }

  const fs::path base = fs::absolute(fs::path(path)).parent_path();
  RunConfig config;
  config.library_path = resolve(base, get_string(j, "library", ""));
  config.dataset_path = resolve(base, get_string(j, "dataset", ""));
  config.property_name = get_string(j, "property", "");
  config.output_dir = get_string(j, "output_dir", "out");

  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (s.contains("ratios")) config.split.ratios = s.at("ratios").get<std::vector<double>>();
    config.split.seed = s.value("seed", config.split.seed);
    config.split.shuffle_ties = s.value("shuffle_ties", config.split.shuffle_ties);
  }
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    config.forest.n_trees = f.value("n_trees", config.forest.n_trees);
    config.forest.seed = f.value("seed", config.forest.seed);
    config.forest.max_depth = f.value("max_depth", config.forest.max_depth);
    config.forest.min_samples_split = f.value("min_samples_split", config.forest.min_samples_split);
    config.forest.min_samples_leaf = f.value("min_samples_leaf", config.forest.min_samples_leaf);
    config.forest.bootstrap = f.value("bootstrap", config.forest.bootstrap);
  }
  if (j.contains("prompts")) {
    config.prompts.seed = j.at("prompts").value("seed", config.prompts.seed);
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    config.predictor.kind = get_string(p, "kind", config.predictor.kind);
    config.predictor.endpoint = get_string(p, "endpoint", "");
    config.predictor.model = get_string(p, "model", "");
    config.predictor.concurrency = p.value("concurrency", config.predictor.concurrency);
    config.predictor.api_key_env = get_string(p, "api_key_env", config.predictor.api_key_env);
    config.predictor.timeout_seconds = p.value("timeout_seconds", config.predictor.timeout_seconds);
    config.predictor.retry_initial_backoff_ms =
        p.value("retry_initial_backoff_ms", config.predictor.retry_initial_backoff_ms);
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    config.ensemble.mode = get_string(e, "mode", config.ensemble.mode);
    config.ensemble.n = e.value("n", config.ensemble.n);
    config.ensemble.temperature = e.value("temperature", config.ensemble.temperature);
    config.ensemble.seed = e.value("seed", config.ensemble.seed);
    config.ensemble.max_new_tokens = e.value("max_new_tokens", config.ensemble.max_new_tokens);
  }
  if (j.contains("tasks")) {
    for (const auto& t : j.at("tasks")) {
      Task task;
      task.dataset_path = resolve(base, get_string(t, "dataset", ""));
      task.property_name = get_string(t, "property", "");
      config.tasks.push_back(std::move(task));
    }
  }

  // Validation.
  if (config.library_path.empty()) throw ConfigError(path + ": missing 'library'");
  if (config.dataset_path.empty()) throw ConfigError(path + ": missing 'dataset'");
  if (config.property_name.empty()) throw ConfigError(path + ": missing 'property'");
  require_file(config.library_path, "FG library");
  require_file(config.dataset_path, "dataset");
  if (find_property(config.property_name) == nullptr)
    throw ConfigError("unknown property '" + config.property_name + "'");
  if (config.forest.n_trees < 1) throw ConfigError("forest.n_trees must be >= 1");
  if (config.forest.max_depth < 1) throw ConfigError("forest.max_depth must be >= 1");
  if (config.forest.min_samples_split < 2) throw ConfigError("forest.min_samples_split must be >= 2");
  if (config.forest.min_samples_leaf < 1) throw ConfigError("forest.min_samples_leaf must be >= 1");
  if (config.predictor.kind != "stub" && config.predictor.kind != "http")
    throw ConfigError("predictor.kind must be 'stub' or 'http'");
  if (config.predictor.kind == "http" &&
      (config.predictor.endpoint.empty() || config.predictor.model.empty()))
    throw ConfigError("http predictor needs 'endpoint' and 'model'");
  if (config.ensemble.mode != "rule" && config.ensemble.mode != "self")
    throw ConfigError("ensemble.mode must be 'rule' or 'self'");
  if (config.ensemble.n < 1) throw ConfigError("ensemble.n must be >= 1");
  if (config.ensemble.mode == "rule" && config.ensemble.n > config.forest.n_trees)
    throw ConfigError("rule-consistency needs ensemble.n <= forest.n_trees");
  if (config.ensemble.mode == "self" && !(config.ensemble.temperature > 0.0))
    throw ConfigError("self-consistency requires temperature > 0");
  return config;
}

void RunConfig::override_seed(std::uint64_t seed) {
  forest.seed = seed;
  prompts.seed = seed;
  ensemble.seed = seed;
}

ExtractResult run_extract(const RunConfig& config) {
  const PipelineContext ctx = load_pipeline(config);
  const fs::path dir = ensure_output_dir(config);

  std::ostringstream out;
  for (std::size_t i = 0; i < ctx.records.size(); ++i) {
    nlohmann::json j;
    j["smiles"] = ctx.records[i].smiles;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [index, count] : ctx.features[i].counts)
      counts[std::to_string(index)] = count;
    j["features"] = std::move(counts);
    out << j.dump() << '\n';
  }
  const std::string path = (dir / "features.jsonl").string();
  write_file(path, out.str());

  ExtractResult result;
  result.written = static_cast<int>(ctx.records.size());
  result.skipped = ctx.skipped;
  result.features_path = path;
  return result;
}

TrainResult run_train(const RunConfig& config) {
  const PipelineContext ctx = load_pipeline(config);
  const fs::path dir = ensure_output_dir(config);

  std::vector<FeatureVector> X;
  std::vector<double> y;
  gather_part(ctx, ctx.split.train, X, y);
  if (X.empty()) throw ConfigError("train split is empty");

  // The standalone specialist: full data, no bootstrap, no subsampling.
  const TreeParams tree_params = tree_params_from(config, ctx.spec.task, MaxFeaturesPolicy::All);
  DecisionTree tree = fit_tree(X, y, tree_params, nullptr);

  const MaxFeaturesPolicy forest_policy = ctx.spec.task == TaskKind::Classification
                                              ? MaxFeaturesPolicy::Sqrt
                                              : MaxFeaturesPolicy::All;
  const TreeParams forest_params = tree_params_from(config, ctx.spec.task, forest_policy);
  RandomForest forest = fit_forest(X, y, config.forest.n_trees, forest_params,
                                   config.forest.seed, ForestOptions{config.forest.bootstrap});

  write_file((dir / "split.json").string(), split_manifest_json(ctx.split) + "\n");
  write_file((dir / "tree.json").string(), tree_to_json(tree) + "\n");
  write_file((dir / "forest.json").string(),
             forest_to_json(forest, ctx.library.version_tag, ctx.library.size()) + "\n");

  TrainResult result;
  result.train_size = static_cast<int>(ctx.split.train.size());
  result.valid_size = static_cast<int>(ctx.split.valid.size());
  result.test_size = static_cast<int>(ctx.split.test.size());
  result.tree_depth = tree.depth;
  result.forest_size = forest.size();
  if (ctx.split.valid.empty()) result.warnings.push_back("valid split is empty");
  if (ctx.split.test.empty()) result.warnings.push_back("test split is empty");
  return result;
}

BuildPromptsResult run_build_prompts(const RunConfig& config) {
  const PipelineContext ctx = load_pipeline(config);
  const fs::path dir = ensure_output_dir(config);
  RandomForest forest = load_forest_artifact(config, ctx.library);

  std::vector<FeatureVector> X;
  std::vector<double> y;
  gather_part(ctx, ctx.split.train, X, y);

  const auto examples =
      build_training_set(ctx.split.train, X, forest, ctx.library, ctx.spec, config.prompts.seed);
  export_jsonl(examples, (dir / "train.jsonl").string());

  BuildPromptsResult result;
  result.written = static_cast<int>(examples.size());
  for (const TrainingExample& ex : examples)
    if (ex.prompt.oversize_hint()) ++result.oversize;
  if (!examples.empty()) result.preview = examples.front().prompt.text;
  return result;
}

std::string run_preview_prompt(const RunConfig& config, int index) {
  const PipelineContext ctx = load_pipeline(config);
  RandomForest forest = load_forest_artifact(config, ctx.library);
  if (ctx.split.train.empty()) throw ConfigError("train split is empty");
  if (index < 0 || index >= static_cast<int>(ctx.split.train.size()))
    throw ConfigError("preview index out of range");

  const MoleculeRecord& rec = ctx.split.train[index];
  Rng rng(stream_seed(config.prompts.seed, static_cast<std::uint64_t>(rec.id)));
  const int rule_index = static_cast<int>(rng.next_below(forest.trees.size()));
  const RuleText rule = verbalize_rule(forest.trees[rule_index], ctx.library);
  return build_prompt(rec, ctx.features[rec.id], rule, ctx.library, ctx.spec).text;
}

PredictResult run_predict(const RunConfig& config) {
  const PipelineContext ctx = load_pipeline(config);
  const fs::path dir = ensure_output_dir(config);
  RandomForest forest = load_forest_artifact(config, ctx.library);
  const auto predictor = make_predictor(config, ctx.library);

  if (ctx.split.test.empty()) throw ConfigError("test split is empty");
  std::vector<FeatureVector> X;
  std::vector<double> y;
  gather_part(ctx, ctx.split.test, X, y);

  DecodingParams params;
  params.temperature = config.ensemble.temperature;
  params.max_new_tokens = config.ensemble.max_new_tokens;
  params.sample_seed = config.ensemble.seed;

  RetryPolicy retry;
  retry.initial_backoff_ms = config.predictor.retry_initial_backoff_ms;

  std::vector<EnsemblePrediction> predictions;
  if (config.ensemble.mode == "rule") {
    predictions =
        rule_consistency_batch(ctx.split.test, X, forest, ctx.library, ctx.spec, *predictor,
                               params, config.ensemble.n, retry, config.predictor.concurrency);
  } else {
    if (!(params.temperature > 0.0))
      throw ConfigError("self-consistency requires temperature > 0");
    // Self-consistency prompts carry the standalone specialist's rule.
    DecisionTree tree = load_tree_artifact(config);
    const RuleText rule = verbalize_rule(tree, ctx.library);
    predictions.reserve(ctx.split.test.size());
    for (std::size_t i = 0; i < ctx.split.test.size(); ++i) {
      const Prompt prompt = build_prompt(ctx.split.test[i], X[i], rule, ctx.library, ctx.spec);
      predictions.push_back(
          self_consistency(prompt, *predictor, params, config.ensemble.n, ctx.spec.task, retry));
    }
  }

  std::ostringstream out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const EnsemblePrediction& p = predictions[i];
    nlohmann::json j;
    j["id"] = ctx.split.test[i].id;
    j["value"] = p.value;
    j["n"] = p.n;
    j["failures"] = p.failures;
    nlohmann::json members = nlohmann::json::array();
    for (const Prediction& m : p.members)
      members.push_back({{"index", m.member_index}, {"value", m.parsed}, {"text", m.raw_text}});
    j["members"] = std::move(members);
    out << j.dump() << '\n';
  }
  const std::string path = (dir / "predictions.jsonl").string();
  write_file(path, out.str());

  PredictResult result;
  result.written = static_cast<int>(predictions.size());
  result.predictions_path = path;
  return result;
}

EvalResult run_eval(const RunConfig& config) {
  const PipelineContext ctx = load_pipeline(config);
  const fs::path dir = ensure_output_dir(config);

  const fs::path pred_path = dir / "predictions.jsonl";
  if (!fs::exists(pred_path))
    throw ConfigError("no predictions at '" + pred_path.string() + "'; run predict first");

  std::vector<int> ids;
  std::vector<double> values;
  {
    std::ifstream in(pred_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(pred_path.string() + ": bad JSONL: " + e.what());
      }
      ids.push_back(j.at("id").get<int>());
      values.push_back(j.at("value").get<double>());
    }
  }

  if (ids.size() != ctx.split.test.size())
    throw ConfigError("predictions cover " + std::to_string(ids.size()) +
                      " molecules but the test split has " +
                      std::to_string(ctx.split.test.size()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != ctx.split.test[i].id)
      throw ConfigError("prediction ids do not match the test split (position " +
                        std::to_string(i) + ")");

  std::vector<double> truth;
  truth.reserve(ctx.split.test.size());
  for (const MoleculeRecord& rec : ctx.split.test) truth.push_back(rec.label);

  const MetricReport report = compute_metric(ctx.spec.metric, values, truth);

  nlohmann::json metrics;
  metrics["property"] = ctx.spec.name;
  metrics["metric"] = report.metric;
  metrics["value"] = report.value;
  metrics["n"] = report.n;

  EvalResult result;
  if (ctx.spec.task == TaskKind::Classification) {
    const DecisionTree tree = load_tree_artifact(config);

    std::vector<bool> tree_correct, model_correct;
    std::vector<bool> model_correct_by_id(ctx.records.size(), false);
    std::vector<bool> tree_correct_by_id(ctx.records.size(), false);
    for (std::size_t i = 0; i < ctx.split.test.size(); ++i) {
      const MoleculeRecord& rec = ctx.split.test[i];
      const double tree_score = predict_tree(tree, ctx.features[rec.id]);
      const bool tree_label = tree_score > 0.5;
      const bool model_label = values[i] > 0.5;
      const bool truth_label = rec.label != 0.0;
      tree_correct.push_back(tree_label == truth_label);
      model_correct.push_back(model_label == truth_label);
      tree_correct_by_id[rec.id] = tree_label == truth_label;
      model_correct_by_id[rec.id] = model_label == truth_label;
    }
    const QuadrantCounts q = quadrants(tree_correct, model_correct);
    metrics["quadrants"] = {{"both_correct", q.both_correct},
                            {"only_tree", q.only_tree},
                            {"only_llm", q.only_llm},
                            {"both_wrong", q.both_wrong}};

    std::vector<Fingerprint> fps;
    fps.reserve(ctx.split.test.size());
    for (const MoleculeRecord& rec : ctx.split.test) fps.push_back(fingerprint(ctx.molecules[rec.id]));
    const auto pairs = find_cliff_pairs(ctx.split.test, fps, 0.8);
    metrics["cliff"] = {{"threshold", 0.8},
                        {"pairs", pairs.size()},
                        {"both_correct_model", cliff_accuracy(pairs, model_correct_by_id)},
                        {"both_correct_tree", cliff_accuracy(pairs, tree_correct_by_id)}};
  } else {
    result.notices.push_back("cliff analysis skipped: regression property");
  }

  result.metrics_json = metrics.dump(2) + "\n";
  write_file((dir / "metrics.json").string(), result.metrics_json);

  std::ostringstream table;
  table << metric_table({{ctx.spec.name, report.metric, format_metric_value(report.value),
                          std::to_string(report.n)}});
  if (metrics.contains("quadrants")) {
    const auto& q = metrics.at("quadrants");
    table << "quadrants: both correct " << q.at("both_correct") << ", tree only "
          << q.at("only_tree") << ", model only " << q.at("only_llm") << ", both wrong "
          << q.at("both_wrong") << "\n";
    const auto& cliff = metrics.at("cliff");
    table << "property cliffs (tanimoto > " << cliff.at("threshold").get<double>()
          << "): " << cliff.at("pairs") << " pairs, both-correct model "
          << cliff.at("both_correct_model") << ", both-correct tree "
          << cliff.at("both_correct_tree") << "\n";
  }
  result.table = table.str();
  return result;
}

RfCompareResult run_rf_compare(const RunConfig& config) {
  std::vector<RunConfig::Task> tasks = config.tasks;
  if (tasks.empty())
    tasks.push_back(RunConfig::Task{config.dataset_path, config.property_name});

  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::array<std::string, 4>> table_rows;
  std::ostringstream table;

  for (const RunConfig::Task& task : tasks) {
    require_file(task.dataset_path, "dataset");
    RunConfig task_config = config;
    task_config.dataset_path = task.dataset_path;
    task_config.property_name = task.property_name;
    if (find_property(task.property_name) == nullptr)
      throw ConfigError("unknown property '" + task.property_name + "'");

    const PipelineContext ctx = load_pipeline(task_config);
    if (ctx.split.test.empty())
      throw ConfigError("test split is empty for '" + task.dataset_path + "'");

    std::vector<FeatureVector> X, Xt;
    std::vector<double> y, yt;
    gather_part(ctx, ctx.split.train, X, y);
    gather_part(ctx, ctx.split.test, Xt, yt);
    if (X.empty()) throw ConfigError("train split is empty for '" + task.dataset_path + "'");

    const MaxFeaturesPolicy policy = ctx.spec.task == TaskKind::Classification
                                         ? MaxFeaturesPolicy::Sqrt
                                         : MaxFeaturesPolicy::All;
    const TreeParams params = tree_params_from(task_config, ctx.spec.task, policy);

    // Streams are per-tree, so the N=100 forest contains the N=50 forest as
    // a prefix; fit once and slice.
    RandomForest big = fit_forest(X, y, 100, params, config.forest.seed,
                                  ForestOptions{config.forest.bootstrap});
    RandomForest small;
    small.seed = big.seed;
    small.params = big.params;
    small.trees.assign(big.trees.begin(), big.trees.begin() + 50);

    auto evaluate = [&](const RandomForest& forest) {
      std::vector<double> pred;
      pred.reserve(Xt.size());
      for (const FeatureVector& x : Xt) pred.push_back(predict_forest(forest, x));
      return compute_metric(ctx.spec.metric, pred, yt);
    };
    const MetricReport r50 = evaluate(small);
    const MetricReport r100 = evaluate(big);
    const double delta =
        ctx.spec.higher_is_better ? r100.value - r50.value : r50.value - r100.value;

    rows.push_back({{"property", ctx.spec.name},
                    {"metric", r50.metric},
                    {"n50", r50.value},
                    {"n100", r100.value},
                    {"delta", delta}});
    table_rows.push_back({ctx.spec.name, r50.metric,
                          format_metric_value(r50.value) + " / " + format_metric_value(r100.value),
                          std::to_string(r50.n)});
  }

  nlohmann::json report;
  report["compare"] = {{"n_small", 50}, {"n_large", 100}};
  report["rows"] = std::move(rows);

  RfCompareResult result;
  result.report_json = report.dump(2) + "\n";
  const fs::path dir = ensure_output_dir(config);
  write_file((dir / "rf_compare.json").string(), result.report_json);

  std::ostringstream text;
  text << "RF comparison (N=50 vs N=100; positive delta = N=100 better)\n";
  std::array<std::size_t, 4> width = {8, 6, 17, 1};
  for (const auto& row : table_rows)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  const std::array<std::string, 4> header = {"Property", "Metric", "N=50 / N=100", "n"};
  auto emit_row = [&](const std::array<std::string, 4>& row) {
    for (std::size_t c = 0; c < 4; ++c) {
      text << row[c];
      if (c + 1 < 4) text << std::string(width[c] - row[c].size() + 2, ' ');
    }
    text << '\n';
  };
  emit_row(header);
  for (const auto& row : table_rows) emit_row(row);
  result.table = text.str();
  return result;
}

}  // namespace treekd
