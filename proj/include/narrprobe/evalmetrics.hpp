#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace narrprobe {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const noexcept { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * k_ + predicted]; }

  std::size_t row_sum(std::size_t truth) const;
  std::size_t col_sum(std::size_t predicted) const;
  std::size_t total() const;
  std::size_t trace() const;

  // Each row divided by its support; all-zero rows stay zero.
  std::vector<std::vector<double>> row_normalized() const;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  AveragedMetrics macro_avg;
  AveragedMetrics weighted_avg;
  std::size_t total = 0;
};

// Zero denominators give 0 for that metric. Throws EmptyMatrix.
EvalReport classification_report(const ConfusionMatrix& cm);

// Fraction of each non-sink class's samples predicted as `sink`.
std::map<std::size_t, double> leakage_rates(const ConfusionMatrix& cm, std::size_t sink);

std::string report_to_json(const EvalReport& report, const ConfusionMatrix& cm,
                           const std::vector<std::string>& class_names, std::size_t sink);
std::string report_markdown(const EvalReport& report, const std::vector<std::string>& class_names);
// Header row and first column carry class names.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);
std::string confusion_normalized_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

// Pair-counting ARI. Labels are arbitrary integers. When the chance-corrected
// denominator vanishes, returns 1 if the partitions coincide, else 0.
double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b);

// Mean silhouette with Euclidean distances; points in singleton clusters
// score 0. Throws SingleCluster with fewer than two distinct labels.
double silhouette(const Eigen::MatrixXd& X, std::span<const int> labels);

// Neighbourhood-preservation score of a projection; ranks break ties by
// index. Requires 1 <= k < n/2 (BadK otherwise).
double trustworthiness(const Eigen::MatrixXd& X_high, const Eigen::MatrixXd& X_low, std::size_t k);

}  // namespace narrprobe
