// treekd command-line front-end: extract | train | build-prompts | predict |
// eval | preview-prompt | rf-compare, driven by a single JSON config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "treekd/cli.hpp"
#include "treekd/inference.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

treekd::RunConfig load_config(const GlobalArgs& args) {
  if (args.config_path.empty()) throw treekd::ConfigError("--config is required");
  treekd::RunConfig config = treekd::RunConfig::load(args.config_path);
  if (args.seed) config.override_seed(*args.seed);
  if (args.out) config.output_dir = *args.out;
  return config;
}

int dispatch(const std::string& command, const GlobalArgs& args, bool preview, int preview_index) {
  const treekd::RunConfig config = load_config(args);

  if (command == "extract") {
    const auto result = treekd::run_extract(config);
    std::cout << "wrote " << result.written << " feature rows to " << result.features_path
              << " (" << result.skipped << " rows skipped)\n";
  } else if (command == "train") {
    const auto result = treekd::run_train(config);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "split " << result.train_size << "/" << result.valid_size << "/"
              << result.test_size << "; specialist depth " << result.tree_depth << "; forest of "
              << result.forest_size << " trees\n";
  } else if (command == "build-prompts") {
    const auto result = treekd::run_build_prompts(config);
    if (result.oversize > 0)
      std::cerr << "warning: " << result.oversize << " prompts exceed the token budget hint\n";
    std::cout << "wrote " << result.written << " training examples\n";
    if (preview && !result.preview.empty())
      std::cout << "--- prompt preview ---\n" << result.preview << "\n";
  } else if (command == "predict") {
    const auto result = treekd::run_predict(config);
    std::cout << "wrote " << result.written << " predictions to " << result.predictions_path
              << "\n";
  } else if (command == "eval") {
    const auto result = treekd::run_eval(config);
    for (const std::string& n : result.notices) std::cerr << "note: " << n << "\n";
    std::cout << result.table;
  } else if (command == "preview-prompt") {
    std::cout << treekd::run_preview_prompt(config, preview_index) << "\n";
  } else if (command == "rf-compare") {
    const auto result = treekd::run_rf_compare(config);
    std::cout << result.table;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional-group specialist models with verbalized rules"};
  app.require_subcommand(1);

  GlobalArgs args;
  std::uint64_t seed_value = 0;
  std::string out_value;
  app.add_option("--config", args.config_path, "JSON run configuration")->required();
  auto* seed_opt = app.add_option("--seed", seed_value, "override forest/prompt/ensemble seeds");
  auto* out_opt = app.add_option("--out", out_value, "override output directory");

  bool preview = false;
  int preview_index = 0;

  app.add_subcommand("extract", "extract FG features to JSONL");
  app.add_subcommand("train", "fit the specialist tree and random forest");
  auto* build = app.add_subcommand("build-prompts", "write the training JSONL");
  build->add_flag("--preview", preview, "print the first assembled prompt");
  app.add_subcommand("predict", "run the test-split ensemble");
  app.add_subcommand("eval", "score predictions and write metrics.json");
  auto* pp = app.add_subcommand("preview-prompt", "print one assembled prompt");
  pp->add_option("--index", preview_index, "train-split position to preview");
  app.add_subcommand("rf-compare", "emit the N=50 vs N=100 forest comparison");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) args.seed = seed_value;
  if (*out_opt) args.out = out_value;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, args, preview, preview_index);
  } catch (const treekd::InferenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == treekd::InferenceError::Kind::BadConfig ? kExitInput : kExitBackend;
  } catch (const treekd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
