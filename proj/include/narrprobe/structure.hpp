#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace narrprobe {

struct KMeansOptions {
  std::size_t k = 12;
  std::uint64_t seed = 42;
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // on the squared Frobenius centroid shift
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<int> assignments;
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t best_restart = 0;
  // Inertia after every assignment step, one trace per restart.
  std::vector<std::vector<double>> inertia_traces;
};

// k-means++ seeding and Lloyd iterations; restart r draws from seed + r and
// the lowest-inertia restart wins (earliest on ties). An empty cluster is
// re-seeded with the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& X, const KMeansOptions& options);

struct PcaResult {
  Eigen::MatrixXd components;  // p x d, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd projected;  // n x p
  bool rank_deficient = false;
};

// SVD of the column-centred matrix. Each component's largest-magnitude
// entry is made positive.
PcaResult pca(const Eigen::MatrixXd& X, std::size_t p);

struct ClusterComposition {
  std::map<int, std::map<int, std::size_t>> counts;  // cluster -> class -> count
  std::map<int, int> dominant;                       // ties to the lower class
};

ClusterComposition cluster_label_composition(std::span<const int> assignments, std::span<const int> y);

}  // namespace narrprobe
