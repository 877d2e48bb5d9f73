// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "deeprnn/cli.hpp"
#include "deeprnn/errors.hpp"

using namespace deeprnn;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int with_config(const Globals& g, const std::function<int(const RunConfig&)>& body) {
  if (g.config.empty()) {
    std::cerr << "error: --config is required\n";
    return cli::kUsageError;
  }
  RawConfig overrides;
  if (g.seed) overrides["seed"] = std::to_string(*g.seed);
  if (!g.out.empty()) overrides["out_dir"] = g.out;
  RunConfig rc;
  try {
    rc = load_run_config(g.config, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsageError;
  }
  return body(rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep recurrent network trainer"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "run configuration (key=value file)");
  app.add_option("--seed", g.seed, "overrides the config seed");
  app.add_option("--out", g.out, "overrides the config out_dir");

  auto* train = app.add_subcommand("train", "train a model, write checkpoint and log");

  cli::EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "score a split with a checkpoint");
  eval->add_option("--checkpoint", eval_opts.checkpoint)->required();
  eval->add_option("--data", eval_opts.data, "file to score");
  eval->add_option("--split", eval_opts.split, "train, valid or test (with --config)");
  eval->add_option("--chunk", eval_opts.chunk, "state-carrying chunk length");
  eval->add_flag("--json", eval_opts.json);

  cli::GradcheckOptions gc_opts;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare BPTT with finite differences");
  gradcheck->add_flag("--all", gc_opts.all_architectures, "check every architecture");
  gradcheck->add_option("--corrupt", gc_opts.corrupt, "perturb one analytic gradient");

  cli::SampleOptions sample_opts;
  auto* sample = app.add_subcommand("sample", "generate text from a checkpoint");
  sample->add_option("--checkpoint", sample_opts.checkpoint)->required();
  sample->add_option("--length", sample_opts.length);
  sample->add_option("--temperature", sample_opts.temperature, "0 decodes the argmax");
  sample->add_option("--prime", sample_opts.prime);
  sample->add_option("--sample-seed", sample_opts.seed);

  auto* params = app.add_subcommand("params", "list parameter tensors and the total");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsageError;
  }

  if (*train) {
    return with_config(g, [](const RunConfig& rc) { return cli::cmd_train(rc, std::cout, std::cerr); });
  }
  if (*eval) {
    if (!g.config.empty()) eval_opts.config = g.config;
    return cli::cmd_eval(eval_opts, std::cout, std::cerr);
  }
  if (*gradcheck) {
    return with_config(g, [&](const RunConfig& rc) {
      return cli::cmd_gradcheck(rc, gc_opts, std::cout, std::cerr);
    });
  }
  if (*sample) {
    if (g.seed) sample_opts.seed = *g.seed;
    return cli::cmd_sample(sample_opts, std::cout, std::cerr);
  }
  if (*params) {
    return with_config(g, [](const RunConfig& rc) { return cli::cmd_params(rc, std::cout, std::cerr); });
  }
  return cli::kUsageError;
}
