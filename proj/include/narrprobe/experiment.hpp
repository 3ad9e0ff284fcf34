#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "narrprobe/probe.hpp"
#include "narrprobe/structure.hpp"

namespace narrprobe {

struct ExperimentConfig {
  std::filesystem::path annotations;
  std::vector<std::filesystem::path> embeddings;
  std::filesystem::path vocab;
  std::filesystem::path output;

  std::size_t align_window = 50;
  bool align_strict = false;

  SplitSpec split;
  TrainConfig train;
  bool balanced_weights = true;

  std::optional<double> control_sigma;
  std::uint64_t control_seed = 42;

  KMeansOptions cluster;
  bool exclude_others = false;
  bool include_centroids = true;

  std::size_t project_dims = 2;
  std::size_t trust_k = 5;
};

// Relative paths resolve against `base_dir`. Unknown keys and wrong types
// raise InvalidConfig.
ExperimentConfig config_from_json(std::string_view text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// A single seed drives the split, training, control and clustering streams.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

// Paths must be set and pairwise distinct.
void validate_config(const ExperimentConfig& config);

// Warnings are reported but never fail a command.
struct CommandResult {
  std::vector<std::string> warnings;
};

// Bundle layout under config.output:
//   analyze/    label_distribution.csv span_lengths.csv pos_distribution.csv summary.json
//   align/      aligned.embf aligned.json alignment.csv summary.json
//   probe/      split.json {real,control}_{model.json,report.json,report.md,confusion.csv,
//               confusion_normalized.csv} summary.json summary.md
//   structure/  kmeans.json metrics.json projection.csv composition.csv
//   report.md   metadata.json (the only time-dependent file)
CommandResult cmd_analyze(const ExperimentConfig& config);
CommandResult cmd_align(const ExperimentConfig& config);
CommandResult cmd_probe(const ExperimentConfig& config);
CommandResult cmd_structure(const ExperimentConfig& config);
CommandResult cmd_report(const ExperimentConfig& config);

}  // namespace narrprobe
