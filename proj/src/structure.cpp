#include "narrprobe/structure.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

#include "narrprobe/error.hpp"
#include "narrprobe/parallel.hpp"
#include "narrprobe/rng.hpp"

namespace narrprobe {

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& X, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(X.rows());
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), X.cols());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centroids.row(0) = X.row(static_cast<Eigen::Index>(first));

  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = (X.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : closest) total += d;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        running += closest[i];
        if (running > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    centroids.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], (X.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }
  return centroids;
}

// Nearest centroid per point (lowest index on ties) and its squared distance.
void assign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
            std::vector<double>& dist) {
  const auto n = static_cast<std::size_t>(X.rows());
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (X.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      labels[i] = best_c;
      dist[i] = best;
    }
  });
}

void repair_empty(const Eigen::MatrixXd& X, Eigen::MatrixXd& centroids, std::vector<int>& labels,
                  std::vector<double>& dist) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(centroids.rows()), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (far == labels.size() || dist[i] > dist[far]) far = i;
    }
    if (far == labels.size()) break;
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(c);
    ++sizes[c];
    dist[far] = 0.0;
    centroids.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(far));
  }
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

struct Run {
  Eigen::MatrixXd centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

Run lloyd(const Eigen::MatrixXd& X, const KMeansOptions& opt, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  Rng rng(seed);
  Run run;
  run.centroids = seed_plus_plus(X, opt.k, rng);
  run.labels.assign(n, 0);
  std::vector<double> dist(n);

  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    assign(X, run.centroids, run.labels, dist);
    repair_empty(X, run.centroids, run.labels, dist);
    run.trace.push_back(sum(dist));

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(run.centroids.rows(), run.centroids.cols());
    std::vector<std::size_t> counts(opt.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      updated.row(run.labels[i]) += X.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(run.labels[i])];
    }
    for (std::size_t c = 0; c < opt.k; ++c) {
      if (counts[c] > 0) {
        updated.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
      } else {
        updated.row(static_cast<Eigen::Index>(c)) = run.centroids.row(static_cast<Eigen::Index>(c));
      }
    }
    const double shift = (updated - run.centroids).squaredNorm();
    run.centroids = std::move(updated);
    run.iterations = it;
    if (shift <= opt.tol) {
      run.converged = true;
      break;
    }
  }
  // Final assignment so labels agree with the returned centroids.
  assign(X, run.centroids, run.labels, dist);
  run.inertia = sum(dist);
  run.trace.push_back(run.inertia);
  return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& X, const KMeansOptions& options) {
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (options.n_init < 1) throw Error(ErrorCode::InvalidArgument, "n_init must be at least 1");
  if (static_cast<std::size_t>(X.rows()) < options.k) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(X.rows()) + " points for k=" + std::to_string(options.k));
  }

  KMeansResult result;
  for (std::size_t r = 0; r < options.n_init; ++r) {
    Run run = lloyd(X, options, options.seed + r);
    result.inertia_traces.push_back(run.trace);
    if (r == 0 || run.inertia < result.inertia) {
      result.centroids = std::move(run.centroids);
      result.assignments = std::move(run.labels);
      result.inertia = run.inertia;
      result.iterations = run.iterations;
      result.converged = run.converged;
      result.best_restart = r;
    }
  }
  return result;
}

PcaResult pca(const Eigen::MatrixXd& X, std::size_t p) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "PCA needs at least two rows");
  if (p < 1 || p > std::min(n - 1, d)) {
    throw Error(ErrorCode::InvalidArgument, "p=" + std::to_string(p) + " outside 1..min(n-1, d)");
  }

  PcaResult out;
  out.mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - out.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double total = s.squaredNorm();

  const auto pi = static_cast<Eigen::Index>(p);
  out.components = svd.matrixV().leftCols(pi).transpose();
  for (Eigen::Index r = 0; r < pi; ++r) {
    Eigen::Index arg = 0;
    out.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (out.components(r, arg) < 0.0) out.components.row(r) *= -1.0;
  }
  out.explained_variance_ratio = total > 0.0 ? Eigen::VectorXd(s.head(pi).array().square() / total)
                                             : Eigen::VectorXd::Zero(pi);
  const double floor = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  out.rank_deficient = total == 0.0 || s(pi - 1) <= floor;
  out.projected = centered * out.components.transpose();
  return out;
}

ClusterComposition cluster_label_composition(std::span<const int> assignments, std::span<const int> y) {
  if (assignments.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "assignments and labels differ in length");
  ClusterComposition out;
  for (std::size_t i = 0; i < y.size(); ++i) ++out.counts[assignments[i]][y[i]];
  for (const auto& [cluster, by_class] : out.counts) {
    int best = by_class.begin()->first;
    std::size_t best_n = 0;
    for (const auto& [cls, n] : by_class) {
      if (n > best_n) {
        best = cls;
        best_n = n;
      }
    }
    out.dominant[cluster] = best;
  }
  return out;
}

}  // namespace narrprobe
