#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace narrprobe {

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  bool stratified = true;
};

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
  std::vector<std::string> warnings;
};

// The train side gets floor(train_fraction * n) samples. Stratified splits
// share that total across classes by largest remainder (ties to the lower
// class index) and draw each class's members with a seeded shuffle.
// A class with a single sample goes to train with a warning; any other class
// left empty on one side raises DegenerateClass.
Split stratified_split(std::span<const int> y, std::size_t num_classes, const SplitSpec& spec);

// w_c = N / (K * N_c) with K = counts.size(). Throws ZeroCount.
std::vector<double> balanced_weights(std::span<const std::size_t> counts);

struct ProbeModel {
  Eigen::MatrixXd W;  // K x d
  Eigen::VectorXd b;  // K
  std::vector<std::string> class_names;

  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(W.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(W.cols()); }
};

ProbeModel zero_model(std::size_t num_classes, std::size_t dim, std::vector<std::string> class_names = {});

// Softmax of W x + b with max subtraction.
Eigen::VectorXd predict_proba(const ProbeModel& m, const Eigen::VectorXd& x);
Eigen::MatrixXd predict_proba(const ProbeModel& m, const Eigen::MatrixXd& X);

// Argmax per row; ties go to the lowest class index.
std::vector<int> predict(const ProbeModel& m, const Eigen::MatrixXd& X);

struct TrainConfig {
  std::size_t max_iterations = 500;
  double grad_tolerance = 1e-4;
  double l2_lambda = 1.0;  // on W only
  std::size_t lbfgs_memory = 10;
  std::vector<double> class_weights;  // empty means all ones
  std::uint64_t seed = 42;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::MatrixXd grad_W;
  Eigen::VectorXd grad_b;
};

// loss = -(1/N) sum_i w[y_i] log P(y_i|x_i) + l2/(2N) ||W||_F^2.
// Throws NonFiniteLoss when a target probability is 0 or the loss is not finite.
LossGradient loss_and_gradient(const ProbeModel& m, const Eigen::MatrixXd& X, std::span<const int> y,
                               const TrainConfig& cfg);

struct TrainResult {
  ProbeModel model;
  bool converged = false;
  bool line_search_failed = false;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double grad_inf_norm = 0.0;
  std::vector<double> loss_trace;
};

// L-BFGS from W = 0, b = 0. Needs at least two classes present in y.
TrainResult train(const Eigen::MatrixXd& X, std::span<const int> y, std::size_t num_classes,
                  const TrainConfig& cfg, std::vector<std::string> class_names = {});

// n x d i.i.d. N(0, sigma^2) from Rng(seed), filled row by row. BadSigma
// unless sigma is finite and positive.
Eigen::MatrixXd control_embeddings(std::size_t rows, std::size_t dim, double sigma, std::uint64_t seed);

// Population standard deviation of all entries pooled. Throws EmptyMatrix.
double embedding_sigma(const Eigen::MatrixXd& X);

std::string model_to_json(const ProbeModel& m, const TrainConfig& cfg, const TrainResult& result);
ProbeModel model_from_json(std::string_view text);

}  // namespace narrprobe
