#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "narrprobe/error.hpp"
#include "narrprobe/experiment.hpp"

using namespace narrprobe;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  bool exclude_others = false;
  std::optional<double> sigma;
  std::optional<double> l2;
  std::optional<std::size_t> max_iter;
  std::optional<double> train_fraction;
  std::optional<std::string> output;
};

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) apply_seed(cfg, *o.seed);
  if (o.k) cfg.cluster.k = *o.k;
  if (o.exclude_others) cfg.exclude_others = true;
  if (o.sigma) cfg.control_sigma = *o.sigma;
  if (o.l2) cfg.train.l2_lambda = *o.l2;
  if (o.max_iter) cfg.train.max_iterations = *o.max_iter;
  if (o.train_fraction) cfg.split.train_fraction = *o.train_fraction;
  if (o.output) cfg.output = *o.output;
  validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe contextual embeddings for narrative structure."};
  app.require_subcommand(1);
  Overrides o;

  const std::vector<std::pair<std::string, std::function<CommandResult(const ExperimentConfig&)>>> commands = {
      {"analyze", cmd_analyze}, {"align", cmd_align},   {"probe", cmd_probe},
      {"structure", cmd_structure}, {"report", cmd_report}};
  const std::vector<std::string> help = {"Corpus label, span-length and POS distributions",
                                         "Align annotations to subword embeddings",
                                         "Train the real and control probes",
                                         "Cluster, project and score the aligned embeddings",
                                         "Run every stage and write report.md"};

  std::function<CommandResult(const ExperimentConfig&)> chosen;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
    sub->add_option("--seed", o.seed, "Seed for split, training, control and clustering");
    sub->add_option("--k", o.k, "Number of clusters");
    sub->add_flag("--exclude-others", o.exclude_others, "Leave the others class out of clustering");
    sub->add_option("--sigma", o.sigma, "Control embedding standard deviation");
    sub->add_option("--l2", o.l2, "L2 penalty on probe weights");
    sub->add_option("--max-iter", o.max_iter, "L-BFGS iteration cap");
    sub->add_option("--train-fraction", o.train_fraction, "Share of samples used for training");
    sub->add_option("--output", o.output, "Output directory");
    sub->callback([&chosen, fn = commands[i].second] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCode::InvalidArgument);
  }

  try {
    const ExperimentConfig cfg = build_config(o);
    const CommandResult result = chosen(cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << cfg.output.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
