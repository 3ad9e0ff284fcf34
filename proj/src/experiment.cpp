#include "narrprobe/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <set>
#include <sstream>

#include <json.hpp>

#include "narrprobe/corpus.hpp"
#include "narrprobe/embedstore.hpp"
#include "narrprobe/error.hpp"
#include "narrprobe/evalmetrics.hpp"
#include "narrprobe/labels.hpp"
#include "narrprobe/textio.hpp"
#include "narrprobe/wordpiece.hpp"

namespace narrprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::InvalidConfig, message); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) config_error("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_value(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

void read_count(const json& obj, const char* key, const std::string& where, std::size_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) config_error(where + "." + key + " must be a non-negative integer");
  out = v.get<std::size_t>();
}

void read_seed(const json& obj, const char* key, const std::string& where, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) config_error(where + "." + key + " must be a non-negative integer");
  out = v.get<std::uint64_t>();
}

fs::path resolve(const json& v, const std::string& key, const fs::path& base) {
  if (!v.is_string()) config_error(key + " must be a path string");
  const fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::string class_name(std::size_t c) { return std::string(to_string(kAllLabels[c])); }

std::vector<std::string> class_names() {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kNumLabels; ++c) names.push_back(class_name(c));
  return names;
}

fs::path subdir(const ExperimentConfig& config, const char* name) {
  const fs::path dir = config.output / name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedLine, path.string() + ": " + e.what());
  }
}

fs::path aligned_stem(const ExperimentConfig& config) { return config.output / "align" / "aligned"; }

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> select(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

// Balanced over the classes present in the training labels; absent classes
// get weight 0.
std::vector<double> present_class_weights(const std::vector<int>& y_train) {
  std::vector<std::size_t> counts(kNumLabels, 0);
  for (int v : y_train) ++counts[static_cast<std::size_t>(v)];
  std::vector<std::size_t> present;
  for (auto c : counts) {
    if (c > 0) present.push_back(c);
  }
  const std::vector<double> w = balanced_weights(present);
  std::vector<double> out(kNumLabels, 0.0);
  std::size_t j = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (counts[c] > 0) out[c] = w[j++];
  }
  return out;
}

struct ProbeRun {
  TrainResult result;
  EvalReport report;
  ConfusionMatrix cm{kNumLabels};
};

ProbeRun run_probe(const Eigen::MatrixXd& X, const std::vector<int>& y, const Split& split, const TrainConfig& tc) {
  ProbeRun run;
  run.result = train(select_rows(X, split.train), select(y, split.train), kNumLabels, tc, class_names());
  const std::vector<int> pred = predict(run.result.model, select_rows(X, split.test));
  run.cm = confusion(select(y, split.test), pred, kNumLabels);
  run.report = classification_report(run.cm);
  return run;
}

void write_probe_outputs(const fs::path& dir, const std::string& prefix, const ProbeRun& run, const TrainConfig& tc) {
  const auto names = class_names();
  const std::size_t sink = index_of(NarrativeLabel::Others);
  write_file(dir / (prefix + "_model.json"), model_to_json(run.result.model, tc, run.result));
  write_file(dir / (prefix + "_report.json"), report_to_json(run.report, run.cm, names, sink));
  write_file(dir / (prefix + "_report.md"), report_markdown(run.report, names));
  write_file(dir / (prefix + "_confusion.csv"), confusion_csv(run.cm, names));
  write_file(dir / (prefix + "_confusion_normalized.csv"), confusion_normalized_csv(run.cm, names));
}

json probe_summary(const ProbeRun& run) {
  return {{"accuracy", run.report.accuracy},
          {"macro_f1", run.report.macro_avg.f1},
          {"weighted_f1", run.report.weighted_avg.f1},
          {"converged", run.result.converged},
          {"line_search_failed", run.result.line_search_failed},
          {"iterations", run.result.iterations},
          {"final_loss", run.result.final_loss}};
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::string json_number(const json& v, int digits) { return v.is_null() ? "n/a" : fixed(v.get<double>(), digits); }

}  // namespace

ExperimentConfig config_from_json(std::string_view text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"annotations", "embeddings", "vocab", "output", "align", "split", "train", "control", "cluster", "project"});
  ExperimentConfig cfg;
  if (root.contains("annotations")) cfg.annotations = resolve(root["annotations"], "annotations", base_dir);
  if (root.contains("vocab")) cfg.vocab = resolve(root["vocab"], "vocab", base_dir);
  if (root.contains("output")) cfg.output = resolve(root["output"], "output", base_dir);
  if (root.contains("embeddings")) {
    const json& e = root["embeddings"];
    if (e.is_array()) {
      for (const auto& item : e) cfg.embeddings.push_back(resolve(item, "embeddings[]", base_dir));
    } else {
      cfg.embeddings.push_back(resolve(e, "embeddings", base_dir));
    }
  }
  if (root.contains("align")) {
    const json& a = root["align"];
    check_keys(a, "align", {"window", "strict"});
    read_count(a, "window", "align", cfg.align_window);
    read_value(a, "strict", "align", cfg.align_strict);
  }
  if (root.contains("split")) {
    const json& s = root["split"];
    check_keys(s, "split", {"train_fraction", "seed", "stratified"});
    read_value(s, "train_fraction", "split", cfg.split.train_fraction);
    read_seed(s, "seed", "split", cfg.split.seed);
    read_value(s, "stratified", "split", cfg.split.stratified);
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    check_keys(t, "train", {"max_iterations", "grad_tolerance", "l2", "memory", "class_weight", "seed"});
    read_count(t, "max_iterations", "train", cfg.train.max_iterations);
    read_value(t, "grad_tolerance", "train", cfg.train.grad_tolerance);
    read_value(t, "l2", "train", cfg.train.l2_lambda);
    read_count(t, "memory", "train", cfg.train.lbfgs_memory);
    read_seed(t, "seed", "train", cfg.train.seed);
    if (t.contains("class_weight")) {
      const json& w = t["class_weight"];
      if (w == "balanced") {
        cfg.balanced_weights = true;
      } else if (w == "none") {
        cfg.balanced_weights = false;
      } else {
        config_error("train.class_weight must be \"balanced\" or \"none\"");
      }
    }
  }
  if (root.contains("control")) {
    const json& c = root["control"];
    check_keys(c, "control", {"sigma", "seed"});
    if (c.contains("sigma") && !c["sigma"].is_null()) {
      if (!c["sigma"].is_number()) config_error("control.sigma must be a number or null");
      cfg.control_sigma = c["sigma"].get<double>();
    }
    read_seed(c, "seed", "control", cfg.control_seed);
  }
  if (root.contains("cluster")) {
    const json& c = root["cluster"];
    check_keys(c, "cluster", {"k", "seed", "n_init", "max_iter", "tol", "exclude_others", "include_centroids"});
    read_count(c, "k", "cluster", cfg.cluster.k);
    read_seed(c, "seed", "cluster", cfg.cluster.seed);
    read_count(c, "n_init", "cluster", cfg.cluster.n_init);
    read_count(c, "max_iter", "cluster", cfg.cluster.max_iter);
    read_value(c, "tol", "cluster", cfg.cluster.tol);
    read_value(c, "exclude_others", "cluster", cfg.exclude_others);
    read_value(c, "include_centroids", "cluster", cfg.include_centroids);
  }
  if (root.contains("project")) {
    const json& p = root["project"];
    check_keys(p, "project", {"p", "trust_k"});
    read_count(p, "p", "project", cfg.project_dims);
    read_count(p, "trust_k", "project", cfg.trust_k);
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  return config_from_json(text, path.parent_path());
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.split.seed = seed;
  config.train.seed = seed;
  config.control_seed = seed;
  config.cluster.seed = seed;
}

void validate_config(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, fs::path>> paths = {
      {"annotations", config.annotations}, {"vocab", config.vocab}, {"output", config.output}};
  if (config.embeddings.empty()) config_error("at least one embeddings file is required");
  for (const auto& e : config.embeddings) paths.emplace_back("embeddings", e);
  std::set<fs::path> seen;
  for (const auto& [name, p] : paths) {
    if (p.empty()) config_error(name + " path is not set");
    if (!seen.insert(fs::weakly_canonical(p)).second) config_error("path used twice: " + p.string());
  }
  if (!(config.split.train_fraction > 0.0 && config.split.train_fraction < 1.0)) {
    config_error("split.train_fraction must lie in (0, 1)");
  }
  if (config.train.l2_lambda < 0.0 || !std::isfinite(config.train.l2_lambda)) config_error("train.l2 must be >= 0");
  if (config.project_dims < 1) config_error("project.p must be at least 1");
}

CommandResult cmd_analyze(const ExperimentConfig& config) {
  CommandResult result;
  const Dataset ds = load_annotations(config.annotations);
  const fs::path dir = subdir(config, "analyze");
  write_file(dir / "label_distribution.csv", label_distribution_csv(label_distribution(ds)));
  write_file(dir / "span_lengths.csv", span_length_csv(span_length_distribution(ds)));

  json skipped = json::array();
  try {
    write_file(dir / "pos_distribution.csv", pos_distribution_csv(pos_distribution(ds)));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPosTags) throw;
    std::error_code ec;
    fs::remove(dir / "pos_distribution.csv", ec);
    result.warnings.push_back("pos distribution skipped: no POS tags in the annotations");
    skipped.push_back("pos_distribution");
  }

  json counts = json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c) counts[class_name(c)] = ds.class_counts()[c];
  write_json(dir / "summary.json", {{"tokens", ds.size()}, {"class_counts", counts}, {"skipped", skipped}});
  return result;
}

CommandResult cmd_align(const ExperimentConfig& config) {
  CommandResult result;
  const Vocab vocab = Vocab::from_file(config.vocab);
  const Dataset ds = load_annotations(config.annotations);
  std::vector<EmbeddingMatrix> docs;
  for (const auto& p : config.embeddings) docs.push_back(read_embeddings(p));

  AlignOptions opt;
  opt.window = config.align_window;
  opt.strict = config.align_strict;
  const AlignedDataset aligned = align_documents(ds, docs, vocab, opt);

  const fs::path dir = subdir(config, "align");
  save_aligned(aligned, dir / "aligned");
  write_file(dir / "alignment.csv", alignment_report_csv(ds, aligned));
  write_json(dir / "summary.json", {{"annotations", ds.size()},
                                    {"aligned", aligned.size()},
                                    {"failures", aligned.failures()},
                                    {"dim", aligned.dim()}});
  if (aligned.failures() > 0) {
    result.warnings.push_back(std::to_string(aligned.failures()) + " of " + std::to_string(ds.size()) +
                              " annotations could not be aligned");
  }
  return result;
}

CommandResult cmd_probe(const ExperimentConfig& config) {
  CommandResult result;
  const AlignedDataset aligned = load_aligned(aligned_stem(config));
  if (aligned.size() == 0) throw Error(ErrorCode::EmptyDataset, "no aligned annotations to probe");
  const Eigen::MatrixXd X = aligned.X.cast<double>();
  const std::vector<int>& y = aligned.y;

  const Split split = stratified_split(y, kNumLabels, config.split);
  result.warnings.insert(result.warnings.end(), split.warnings.begin(), split.warnings.end());

  TrainConfig tc = config.train;
  const std::vector<int> y_train = select(y, split.train);
  if (config.balanced_weights) tc.class_weights = present_class_weights(y_train);

  const ProbeRun real = run_probe(X, y, split, tc);

  const double sigma = config.control_sigma ? *config.control_sigma : embedding_sigma(X);
  const Eigen::MatrixXd control_X = control_embeddings(aligned.size(), aligned.dim(), sigma, config.control_seed);
  const ProbeRun control = run_probe(control_X, y, split, tc);

  for (const auto* run : {&real, &control}) {
    if (!run->result.converged) {
      result.warnings.push_back(std::string(run == &real ? "real" : "control") + " probe stopped after " +
                                std::to_string(run->result.iterations) + " iterations without converging");
    }
  }

  const fs::path dir = subdir(config, "probe");
  write_json(dir / "split.json", {{"train_fraction", config.split.train_fraction},
                                  {"seed", config.split.seed},
                                  {"stratified", config.split.stratified},
                                  {"train", split.train},
                                  {"test", split.test},
                                  {"warnings", split.warnings}});
  write_probe_outputs(dir, "real", real, tc);
  write_probe_outputs(dir, "control", control, tc);

  const double gap = real.report.accuracy - control.report.accuracy;
  write_json(dir / "summary.json", {{"train_size", split.train.size()},
                                    {"test_size", split.test.size()},
                                    {"dim", aligned.dim()},
                                    {"class_weights", tc.class_weights},
                                    {"control_sigma", sigma},
                                    {"control_sigma_source", config.control_sigma ? "config" : "embeddings"},
                                    {"control_seed", config.control_seed},
                                    {"real", probe_summary(real)},
                                    {"control", probe_summary(control)},
                                    {"accuracy_gap", gap},
                                    {"warnings", result.warnings}});

  std::string md = "| probe | accuracy | macro f1 | weighted f1 | iterations | converged |\n|---|---|---|---|---|---|\n";
  for (const auto& [name, run] : {std::pair{"real", &real}, std::pair{"control", &control}}) {
    md += std::string("| ") + name + " | " + fixed(run->report.accuracy, 4) + " | " + fixed(run->report.macro_avg.f1, 4) +
          " | " + fixed(run->report.weighted_avg.f1, 4) + " | " + std::to_string(run->result.iterations) + " | " +
          (run->result.converged ? "yes" : "no") + " |\n";
  }
  md += "\nAccuracy gap (real - control): " + fixed(gap, 4) + "\n";
  write_file(dir / "summary.md", md);
  return result;
}

CommandResult cmd_structure(const ExperimentConfig& config) {
  CommandResult result;
  const AlignedDataset aligned = load_aligned(aligned_stem(config));
  const Eigen::MatrixXd all = aligned.X.cast<double>();
  const int others = static_cast<int>(index_of(NarrativeLabel::Others));

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (!config.exclude_others || aligned.y[i] != others) rows.push_back(i);
  }
  const Eigen::MatrixXd X = select_rows(all, rows);
  const std::vector<int> y = select(aligned.y, rows);

  const KMeansResult km = kmeans(X, config.cluster);

  json sil = nullptr;
  try {
    sil = silhouette(X, km.assignments);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingleCluster) throw;
    result.warnings.push_back("silhouette undefined: all points fall in a single cluster");
  }

  const json ari = adjusted_rand_index(km.assignments, y);
  json ari_narrative = nullptr;
  {
    std::vector<int> a, b;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != others) {
        a.push_back(km.assignments[i]);
        b.push_back(y[i]);
      }
    }
    if (a.size() >= 2) {
      ari_narrative = adjusted_rand_index(a, b);
    } else {
      result.warnings.push_back("ARI without others undefined: fewer than two narrative points");
    }
  }

  const PcaResult proj = pca(X, config.project_dims);
  if (proj.rank_deficient) result.warnings.push_back("projection is rank deficient");
  const double trust = trustworthiness(X, proj.projected, config.trust_k);

  const fs::path dir = subdir(config, "structure");
  std::string csv = "index";
  for (std::size_t p = 0; p < config.project_dims; ++p) csv += ",pc" + std::to_string(p + 1);
  csv += ",label,cluster\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += std::to_string(rows[i]);
    for (Eigen::Index p = 0; p < proj.projected.cols(); ++p) {
      csv += "," + format_number(proj.projected(static_cast<Eigen::Index>(i), p));
    }
    csv += "," + class_name(static_cast<std::size_t>(y[i])) + "," + std::to_string(km.assignments[i]) + "\n";
  }
  write_file(dir / "projection.csv", csv);

  const ClusterComposition comp = cluster_label_composition(km.assignments, y);
  std::string comp_csv = "cluster,label,count,fraction\n";
  json dominant = json::object();
  for (const auto& [cluster, by_label] : comp.counts) {
    std::size_t size = 0;
    for (const auto& [label, count] : by_label) size += count;
    for (const auto& [label, count] : by_label) {
      comp_csv += std::to_string(cluster) + "," + class_name(static_cast<std::size_t>(label)) + "," +
                  std::to_string(count) + "," + format_number(static_cast<double>(count) / static_cast<double>(size)) +
                  "\n";
    }
    dominant[std::to_string(cluster)] = class_name(static_cast<std::size_t>(comp.dominant.at(cluster)));
  }
  write_file(dir / "composition.csv", comp_csv);

  json kj = {{"k", config.cluster.k},
             {"seed", config.cluster.seed},
             {"n_init", config.cluster.n_init},
             {"max_iter", config.cluster.max_iter},
             {"tol", config.cluster.tol},
             {"inertia", km.inertia},
             {"iterations", km.iterations},
             {"converged", km.converged},
             {"best_restart", km.best_restart},
             {"inertia_traces", km.inertia_traces},
             {"rows", rows},
             {"assignments", km.assignments}};
  if (config.include_centroids) {
    json centroids = json::array();
    for (Eigen::Index r = 0; r < km.centroids.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < km.centroids.cols(); ++c) row.push_back(km.centroids(r, c));
      centroids.push_back(row);
    }
    kj["centroids"] = centroids;
  }
  write_json(dir / "kmeans.json", kj);

  write_json(dir / "metrics.json",
             {{"points", rows.size()},
              {"others_excluded", config.exclude_others},
              {"k", config.cluster.k},
              {"inertia", km.inertia},
              {"silhouette", sil},
              {"ari", ari},
              {"ari_without_others", ari_narrative},
              {"projection_dims", config.project_dims},
              {"explained_variance_ratio",
               std::vector<double>(proj.explained_variance_ratio.data(),
                                   proj.explained_variance_ratio.data() + proj.explained_variance_ratio.size())},
              {"trustworthiness", trust},
              {"trust_k", config.trust_k},
              {"dominant_label", dominant},
              {"warnings", result.warnings}});
  return result;
}

CommandResult cmd_report(const ExperimentConfig& config) {
  CommandResult result;
  for (auto* step : {&cmd_analyze, &cmd_align, &cmd_probe, &cmd_structure}) {
    const CommandResult r = step(config);
    result.warnings.insert(result.warnings.end(), r.warnings.begin(), r.warnings.end());
  }

  const json align = read_json(config.output / "align" / "summary.json");
  const json probe = read_json(config.output / "probe" / "summary.json");
  const json structure = read_json(config.output / "structure" / "metrics.json");

  std::string md = "# Narrative probing report\n\n## Data\n\n";
  md += "Annotations: " + align["annotations"].dump() + ", aligned: " + align["aligned"].dump() +
        ", alignment failures: " + align["failures"].dump() + ", embedding dim: " + align["dim"].dump() + "\n\n";
  md += "Label distribution: `analyze/label_distribution.csv`.\n\n";
  md += "## Probing\n\n";
  md += "Train/test: " + probe["train_size"].dump() + "/" + probe["test_size"].dump() +
        ". Control sigma: " + fixed(probe["control_sigma"].get<double>(), 4) + ".\n\n";
  md += read_file(config.output / "probe" / "summary.md");
  md += "\n### Real probe\n\n" + read_file(config.output / "probe" / "real_report.md");
  md += "\n### Control probe\n\n" + read_file(config.output / "probe" / "control_report.md");
  md += "\n## Structure\n\n";
  md += "| metric | value |\n|---|---|\n";
  md += "| points | " + structure["points"].dump() + " |\n";
  md += "| k | " + structure["k"].dump() + " |\n";
  md += "| silhouette | " + json_number(structure["silhouette"], 4) + " |\n";
  md += "| ARI | " + json_number(structure["ari"], 4) + " |\n";
  md += "| ARI without others | " + json_number(structure["ari_without_others"], 4) + " |\n";
  md += "| trustworthiness (k=" + structure["trust_k"].dump() + ") | " +
        json_number(structure["trustworthiness"], 4) + " |\n";
  double explained = 0.0;
  for (const auto& v : structure["explained_variance_ratio"]) explained += v.get<double>();
  md += "| variance explained by projection | " + fixed(explained, 4) + " |\n";
  md += "\n## Warnings\n\n";
  if (result.warnings.empty()) md += "None.\n";
  for (const auto& w : result.warnings) md += "- " + w + "\n";
  write_file(config.output / "report.md", md);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  write_json(config.output / "metadata.json", {{"generated_at", stamp}, {"tool_version", kToolVersion}});
  return result;
}

}  // namespace narrprobe
