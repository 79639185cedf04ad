#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treekd/dataset.hpp"
#include "treekd/errors.hpp"
#include "treekd/forest.hpp"
#include "treekd/pattern.hpp"

namespace treekd {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// One experiment = one JSON config. String values interpolate ${ENV_VAR};
// input paths are resolved relative to the config file's directory.
struct RunConfig {
  std::string library_path;
  std::string dataset_path;
  std::string property_name;

  struct Split {
    std::vector<double> ratios{0.7, 0.1, 0.2};
    std::uint64_t seed = 0;
    bool shuffle_ties = false;
  } split;

  struct Forest {
    int n_trees = 50;
    std::uint64_t seed = 42;
    int max_depth = 6;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    bool bootstrap = true;
  } forest;

  struct Prompts {
    std::uint64_t seed = 7;
  } prompts;

  struct PredictorCfg {
    std::string kind = "stub";  // stub | http
    std::string endpoint;
    std::string model;
    int concurrency = 8;
    std::string api_key_env = "TREEKD_API_KEY";
    int timeout_seconds = 60;
    int retry_initial_backoff_ms = 100;
  } predictor;

  struct Ensemble {
    std::string mode = "rule";  // rule | self
    int n = 50;
    double temperature = 0.0;
    std::uint64_t seed = 9;
    int max_new_tokens = 64;
  } ensemble;

  struct Task {
    std::string dataset_path;
    std::string property_name;
  };
  std::vector<Task> tasks;  // rf-compare rows; defaults to the main dataset

  std::string output_dir = "out";

  static RunConfig load(const std::string& path);
  // Applies --seed to the forest, prompt and ensemble seeds.
  void override_seed(std::uint64_t seed);
};

struct ExtractResult {
  int written = 0;
  int skipped = 0;
  std::string features_path;
};

struct TrainResult {
  int train_size = 0;
  int valid_size = 0;
  int test_size = 0;
  int tree_depth = 0;
  int forest_size = 0;
  std::vector<std::string> warnings;
};

struct BuildPromptsResult {
  int written = 0;
  int oversize = 0;
  std::string preview;  // first prompt, verbatim
};

struct PredictResult {
  int written = 0;
  std::string predictions_path;
};

struct EvalResult {
  std::string metrics_json;
  std::string table;
  std::vector<std::string> notices;
};

struct RfCompareResult {
  std::string report_json;
  std::string table;
};

ExtractResult run_extract(const RunConfig& config);
TrainResult run_train(const RunConfig& config);
BuildPromptsResult run_build_prompts(const RunConfig& config);
PredictResult run_predict(const RunConfig& config);
EvalResult run_eval(const RunConfig& config);
// Prompt for one train-split record, without writing anything.
std::string run_preview_prompt(const RunConfig& config, int index);
// N=50 vs N=100 forest comparison over config.tasks.
RfCompareResult run_rf_compare(const RunConfig& config);

}  // namespace treekd
