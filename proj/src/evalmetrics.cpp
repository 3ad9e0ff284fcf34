#include "narrprobe/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "narrprobe/error.hpp"
#include "narrprobe/parallel.hpp"
#include "narrprobe/textio.hpp"

namespace narrprobe {

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) s += at(t, predicted);
  return s;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t c = 0; c < k_; ++c) s += at(c, c);
  return s;
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
  std::vector<std::vector<double>> out(k_, std::vector<double>(k_, 0.0));
  for (std::size_t t = 0; t < k_; ++t) {
    const std::size_t support = row_sum(t);
    if (support == 0) continue;
    for (std::size_t p = 0; p < k_; ++p) out[t][p] = static_cast<double>(at(t, p)) / static_cast<double>(support);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " true labels vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label out of range at position " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

EvalReport classification_report(const ConfusionMatrix& cm) {
  EvalReport r;
  r.total = cm.total();
  if (r.total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  const std::size_t k = cm.num_classes();
  const double total = static_cast<double>(r.total);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m;
    const double hit = static_cast<double>(cm.at(c, c));
    const std::size_t predicted = cm.col_sum(c);
    m.support = cm.row_sum(c);
    m.precision = predicted == 0 ? 0.0 : hit / static_cast<double>(predicted);
    m.recall = m.support == 0 ? 0.0 : hit / static_cast<double>(m.support);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    r.per_class.push_back(m);

    r.macro_avg.precision += m.precision / static_cast<double>(k);
    r.macro_avg.recall += m.recall / static_cast<double>(k);
    r.macro_avg.f1 += m.f1 / static_cast<double>(k);
    const double share = static_cast<double>(m.support) / total;
    r.weighted_avg.precision += share * m.precision;
    r.weighted_avg.recall += share * m.recall;
    r.weighted_avg.f1 += share * m.f1;
  }
  r.accuracy = static_cast<double>(cm.trace()) / total;
  return r;
}

std::map<std::size_t, double> leakage_rates(const ConfusionMatrix& cm, std::size_t sink) {
  if (sink >= cm.num_classes()) throw Error(ErrorCode::LabelOutOfRange, "sink class out of range");
  std::map<std::size_t, double> out;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    if (c == sink) continue;
    const std::size_t support = cm.row_sum(c);
    out[c] = support == 0 ? 0.0 : static_cast<double>(cm.at(c, sink)) / static_cast<double>(support);
  }
  return out;
}

std::string report_to_json(const EvalReport& report, const ConfusionMatrix& cm,
                           const std::vector<std::string>& class_names, std::size_t sink) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json classes = ordered_json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    ordered_json row;
    row["class"] = class_names.at(c);
    row["precision"] = m.precision;
    row["recall"] = m.recall;
    row["f1"] = m.f1;
    row["support"] = m.support;
    classes.push_back(std::move(row));
  }
  j["per_class"] = std::move(classes);
  j["accuracy"] = report.accuracy;
  j["macro_avg"] = {{"precision", report.macro_avg.precision},
                    {"recall", report.macro_avg.recall},
                    {"f1", report.macro_avg.f1}};
  j["weighted_avg"] = {{"precision", report.weighted_avg.precision},
                       {"recall", report.weighted_avg.recall},
                       {"f1", report.weighted_avg.f1}};
  j["total"] = report.total;

  ordered_json counts = ordered_json::array();
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    std::vector<std::size_t> row;
    for (std::size_t p = 0; p < cm.num_classes(); ++p) row.push_back(cm.at(t, p));
    counts.push_back(row);
  }
  j["confusion"] = std::move(counts);
  j["confusion_row_normalized"] = cm.row_normalized();
  ordered_json leak;
  leak["sink"] = class_names.at(sink);
  for (const auto& [c, rate] : leakage_rates(cm, sink)) leak["rates"][class_names.at(c)] = rate;
  j["leakage"] = std::move(leak);
  return j.dump(1) + "\n";
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string report_markdown(const EvalReport& report, const std::vector<std::string>& class_names) {
  std::string out = "| class | precision | recall | f1 | support |\n|---|---|---|---|---|\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    out += "| " + class_names.at(c) + " | " + fixed2(m.precision) + " | " + fixed2(m.recall) + " | " +
           fixed2(m.f1) + " | " + std::to_string(m.support) + " |\n";
  }
  out += "| accuracy |  |  | " + fixed2(report.accuracy) + " | " + std::to_string(report.total) + " |\n";
  out += "| macro avg | " + fixed2(report.macro_avg.precision) + " | " + fixed2(report.macro_avg.recall) + " | " +
         fixed2(report.macro_avg.f1) + " | " + std::to_string(report.total) + " |\n";
  out += "| weighted avg | " + fixed2(report.weighted_avg.precision) + " | " +
         fixed2(report.weighted_avg.recall) + " | " + fixed2(report.weighted_avg.f1) + " | " +
         std::to_string(report.total) + " |\n";
  return out;
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  std::string out = "true\\predicted";
  for (std::size_t p = 0; p < cm.num_classes(); ++p) out += "," + csv_field(class_names.at(p));
  out += "\n";
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    out += csv_field(class_names.at(t));
    for (std::size_t p = 0; p < cm.num_classes(); ++p) out += "," + std::to_string(cm.at(t, p));
    out += "\n";
  }
  return out;
}

std::string confusion_normalized_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  const auto norm = cm.row_normalized();
  std::string out = "true\\predicted";
  for (std::size_t p = 0; p < cm.num_classes(); ++p) out += "," + csv_field(class_names.at(p));
  out += "\n";
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    out += csv_field(class_names.at(t));
    for (std::size_t p = 0; p < cm.num_classes(); ++p) out += "," + format_number(norm[t][p]);
    out += "\n";
  }
  return out;
}

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) throw Error(ErrorCode::LengthMismatch, "labelings differ in length");
  if (labels_a.size() < 2) throw Error(ErrorCode::InvalidArgument, "ARI needs at least two points");

  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> count_a;
  std::map<int, std::size_t> count_b;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++joint[{labels_a[i], labels_b[i]}];
    ++count_a[labels_a[i]];
    ++count_b[labels_b[i]];
  }
  double sum_joint = 0.0;
  for (const auto& [_, n] : joint) sum_joint += choose2(static_cast<double>(n));
  double sum_a = 0.0;
  for (const auto& [_, n] : count_a) sum_a += choose2(static_cast<double>(n));
  double sum_b = 0.0;
  for (const auto& [_, n] : count_b) sum_b += choose2(static_cast<double>(n));

  const double expected = sum_a * sum_b / choose2(static_cast<double>(labels_a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index - expected == 0.0) {
    // Same partition up to renaming iff every block pairs with exactly one block.
    const bool same = joint.size() == count_a.size() && joint.size() == count_b.size();
    return same ? 1.0 : 0.0;
  }
  return (sum_joint - expected) / (max_index - expected);
}

double silhouette(const Eigen::MatrixXd& X, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (labels.size() != n) throw Error(ErrorCode::LengthMismatch, "labels differ from row count");

  std::map<int, std::size_t> ids;
  for (int label : labels) ids.emplace(label, 0);
  if (ids.size() < 2) throw Error(ErrorCode::SingleCluster, "silhouette needs at least two clusters");
  std::size_t next = 0;
  for (auto& [_, id] : ids) id = next++;
  std::vector<std::size_t> cluster(n);
  std::vector<std::size_t> size(ids.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = ids.at(labels[i]);
    ++size[cluster[i]];
  }

  std::vector<double> score(n, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> sums(ids.size());
    for (std::size_t i = begin; i < end; ++i) {
      if (size[cluster[i]] == 1) continue;
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        sums[cluster[j]] += (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).norm();
      }
      const double a = sums[cluster[i]] / static_cast<double>(size[cluster[i]] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < sums.size(); ++c) {
        if (c == cluster[i]) continue;
        b = std::min(b, sums[c] / static_cast<double>(size[c]));
      }
      const double denom = std::max(a, b);
      score[i] = denom == 0.0 ? 0.0 : (b - a) / denom;
    }
  });
  double total = 0.0;
  for (double s : score) total += s;
  return total / static_cast<double>(n);
}

namespace {

// Neighbour order of row i (self excluded), nearest first, ties by index.
std::vector<std::size_t> neighbour_order(const Eigen::MatrixXd& X, std::size_t i, std::vector<double>& dist) {
  const auto n = static_cast<std::size_t>(X.rows());
  for (std::size_t j = 0; j < n; ++j) {
    dist[j] = (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).squaredNorm();
  }
  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) order.push_back(j);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  });
  return order;
}

}  // namespace

double trustworthiness(const Eigen::MatrixXd& X_high, const Eigen::MatrixXd& X_low, std::size_t k) {
  if (X_high.rows() != X_low.rows()) throw Error(ErrorCode::LengthMismatch, "spaces differ in row count");
  const auto n = static_cast<std::size_t>(X_high.rows());
  if (k < 1 || 2 * k >= n) {
    throw Error(ErrorCode::BadK, "k=" + std::to_string(k) + " must satisfy 1 <= k < n/2 with n=" + std::to_string(n));
  }

  std::vector<double> penalty(n, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dist(n);
    std::vector<std::size_t> rank_high(n, 0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto high = neighbour_order(X_high, i, dist);
      for (std::size_t r = 0; r < high.size(); ++r) rank_high[high[r]] = r + 1;
      const auto low = neighbour_order(X_low, i, dist);
      for (std::size_t r = 0; r < k; ++r) {
        const std::size_t rank = rank_high[low[r]];
        if (rank > k) penalty[i] += static_cast<double>(rank - k);
      }
    }
  });
  double total = 0.0;
  for (double p : penalty) total += p;
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * total;
}

}  // namespace narrprobe
