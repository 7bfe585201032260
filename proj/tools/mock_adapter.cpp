// finbench-mock-adapter: stand-in for a real training/inference adapter.
// Behaviour is picked with FINBENCH_MOCK_BEHAVIOR (echo_gold, majority_class,
// fixed_string); see runner.hpp.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "finbench/common.hpp"
#include "finbench/runner.hpp"

int main(int argc, char** argv) {
  namespace runner = finbench::runner;
  CLI::App app{"Mock adapter for the finbench file protocol", "finbench-mock-adapter"};
  app.require_subcommand(1);

  std::string train_file, eval_file, config, output_dir;
  auto* train = app.add_subcommand("train", "Write synthetic checkpoints");
  train->add_option("--train-file", train_file)->required();
  train->add_option("--eval-file", eval_file)->required();
  train->add_option("--config", config)->required();
  train->add_option("--output-dir", output_dir)->required();

  std::string model, prompts, output;
  int max_new_tokens = 0;
  auto* infer = app.add_subcommand("infer", "Write one completion per prompt");
  infer->add_option("--model", model)->required();
  infer->add_option("--prompts", prompts)->required();
  infer->add_option("--output", output)->required();
  infer->add_option("--max-new-tokens", max_new_tokens)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const runner::MockOptions options = runner::mock_options_from_env();
    if (train->parsed()) runner::mock_train(train_file, eval_file, config, output_dir, options);
    else runner::mock_infer(model, prompts, output, max_new_tokens, options);
  } catch (const finbench::Error& e) {
    std::fprintf(stderr, "mock adapter: %s\n", e.what());
    return e.code() == finbench::ErrorCode::InvalidOverride || e.code() == finbench::ErrorCode::InvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mock adapter: %s\n", e.what());
    return 1;
  }
  return 0;
}
