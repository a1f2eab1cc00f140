#include "cli/cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "cli/commands.hpp"
#include "tmt/errors.hpp"

namespace tmt::cli {

int run_cli(int argc, const char* const* argv, std::ostream& err) {
  CLI::App app{"Transferability-masked segmentation experiments on synthetic domain shift"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::optional<double> p_t;
  std::optional<double> lambda_m;
  app.add_option("--config", config_path, "JSON run config (unknown keys are rejected)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--p_T", p_t, "Transferability percentile p_T")->check(CLI::Range(0.0, 100.0));
  app.add_option("--lambda_M", lambda_m, "Mask threshold lambda_M")->check(CLI::Range(0.0, 1.0));

  auto* gen = app.add_subcommand("gen", "Generate a two-domain synthetic dataset");

  std::string dataset;
  auto* estimate = app.add_subcommand("estimate", "Cluster images, train the estimator, write T maps and PAD");
  estimate->add_option("--dataset", dataset, "Dataset directory from `gen`")->required();

  std::string maps;
  std::string variant_name_arg = "tmt";
  auto* finetune = app.add_subcommand("finetune", "Train on source, fine-tune on target, evaluate");
  finetune->add_option("--dataset", dataset, "Dataset directory from `gen`")->required();
  finetune->add_option("--maps", maps, "Output directory of `estimate`");
  finetune->add_option("--variant", variant_name_arg, "vanilla, tmt, no_acte or no_tma")
      ->check(CLI::IsMember({"vanilla", "tmt", "no_acte", "no_tma"}));

  auto* ablate = app.add_subcommand("ablate", "Four-variant ablation over num_seeds seeds");
  auto* sweep = app.add_subcommand("sweep", "tmt fine-tuning across sweep_p_T values");

  std::size_t instances = 20;
  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every trainable path");
  gradcheck->add_option("--instances", instances, "Random instances per component")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_run_config(config_path);
    if (*seed_opt) config.seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (p_t) config.experiment.percentile = *p_t;
    if (lambda_m) config.experiment.mask_threshold = *lambda_m;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen) cmd_gen(config);
    else if (*estimate) cmd_estimate(config, dataset);
    else if (*finetune) cmd_finetune(config, dataset, maps, *parse_variant(variant_name_arg));
    else if (*ablate) cmd_ablate(config);
    else if (*sweep) cmd_sweep(config);
    else if (*gradcheck && !cmd_gradcheck(config, instances, tolerance)) {
      err << "gradcheck: tolerance " << tolerance << " exceeded\n";
      return kExitRuntime;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace tmt::cli
