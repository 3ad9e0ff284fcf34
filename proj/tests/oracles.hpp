#pragma once

// Brute-force reference implementations for tests. None of these call into
// the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Core>

namespace oracle {

inline std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<long double> e;
  long double z = 0;
  for (double v : logits) {
    e.push_back(std::exp(static_cast<long double>(v)));
    z += e.back();
  }
  std::vector<double> out;
  for (auto v : e) out.push_back(static_cast<double>(v / z));
  return out;
}

// Weighted mean cross-entropy + l2/(2N)||W||^2, with W as K rows of d.
struct Problem {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::size_t K = 0;
  std::vector<double> weights;
  double l2 = 1.0;
};

inline double loss(const Problem& p, const std::vector<double>& W, const std::vector<double>& b) {
  const std::size_t d = p.X.empty() ? 0 : p.X[0].size();
  long double total = 0;
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    std::vector<double> z(p.K);
    for (std::size_t c = 0; c < p.K; ++c) {
      z[c] = b[c];
      for (std::size_t j = 0; j < d; ++j) z[c] += W[c * d + j] * p.X[i][j];
    }
    const double m = *std::max_element(z.begin(), z.end());
    long double s = 0;
    for (double v : z) s += std::exp(static_cast<long double>(v - m));
    const long double log_p = z[static_cast<std::size_t>(p.y[i])] - m - std::log(s);
    total += -p.weights[static_cast<std::size_t>(p.y[i])] * log_p;
  }
  long double reg = 0;
  for (double w : W) reg += static_cast<long double>(w) * w;
  const long double n = static_cast<long double>(p.X.size());
  return static_cast<double>(total / n + p.l2 / (2 * n) * reg);
}

// Gradient by explicit loops.
inline void gradient(const Problem& p, const std::vector<double>& W, const std::vector<double>& b,
                     std::vector<double>& gW, std::vector<double>& gb) {
  const std::size_t d = p.X[0].size();
  const double n = static_cast<double>(p.X.size());
  gW.assign(W.size(), 0.0);
  gb.assign(b.size(), 0.0);
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    std::vector<double> z(p.K);
    for (std::size_t c = 0; c < p.K; ++c) {
      z[c] = b[c];
      for (std::size_t j = 0; j < d; ++j) z[c] += W[c * d + j] * p.X[i][j];
    }
    const std::vector<double> prob = softmax(z);
    const double w = p.weights[static_cast<std::size_t>(p.y[i])];
    for (std::size_t c = 0; c < p.K; ++c) {
      const double r = w * (prob[c] - (static_cast<int>(c) == p.y[i] ? 1.0 : 0.0)) / n;
      gb[c] += r;
      for (std::size_t j = 0; j < d; ++j) gW[c * d + j] += r * p.X[i][j];
    }
  }
  for (std::size_t k = 0; k < W.size(); ++k) gW[k] += p.l2 / n * W[k];
}

// Plain gradient descent with step 1/L, L from the softmax Hessian bound.
inline double gradient_descent_loss(const Problem& p, std::size_t steps) {
  const std::size_t d = p.X[0].size();
  const double n = static_cast<double>(p.X.size());
  double lipschitz = p.l2 / n;
  double data = 0.0;
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    double sq = 1.0;
    for (double v : p.X[i]) sq += v * v;
    data += p.weights[static_cast<std::size_t>(p.y[i])] * 0.5 * sq;
  }
  lipschitz += data / n;
  const double step = 1.0 / lipschitz;
  std::vector<double> W(p.K * d, 0.0), b(p.K, 0.0), gW, gb;
  for (std::size_t t = 0; t < steps; ++t) {
    gradient(p, W, b, gW, gb);
    for (std::size_t k = 0; k < W.size(); ++k) W[k] -= step * gW[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= step * gb[k];
  }
  return loss(p, W, b);
}

inline double two_pass_sigma(const Eigen::MatrixXd& X) {
  long double mean = 0;
  for (Eigen::Index i = 0; i < X.size(); ++i) mean += X.data()[i];
  mean /= X.size();
  long double ss = 0;
  for (Eigen::Index i = 0; i < X.size(); ++i) ss += (X.data()[i] - mean) * (X.data()[i] - mean);
  return static_cast<double>(std::sqrt(ss / X.size()));
}

inline std::vector<std::vector<std::size_t>> confusion(const std::vector<int>& t, const std::vector<int>& p,
                                                        std::size_t K) {
  std::vector<std::vector<std::size_t>> cm(K, std::vector<std::size_t>(K, 0));
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = 0; b < K; ++b) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == static_cast<int>(a) && p[i] == static_cast<int>(b)) ++cm[a][b];
      }
    }
  }
  return cm;
}

// Per-class precision/recall/f1 counted straight from the label lists, then
// macro and support-weighted means. Zero denominators give 0.
struct Report {
  std::vector<double> precision, recall, f1;
  double accuracy = 0, macro_p = 0, macro_r = 0, macro_f1 = 0, weighted_p = 0, weighted_r = 0, weighted_f1 = 0;
};

inline Report report(const std::vector<int>& t, const std::vector<int>& p, std::size_t K) {
  Report r;
  const double n = static_cast<double>(t.size());
  double correct = 0;
  for (std::size_t i = 0; i < t.size(); ++i) correct += t[i] == p[i] ? 1 : 0;
  r.accuracy = correct / n;
  for (std::size_t c = 0; c < K; ++c) {
    double tp = 0, predicted = 0, support = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const bool is_t = t[i] == static_cast<int>(c), is_p = p[i] == static_cast<int>(c);
      tp += is_t && is_p ? 1 : 0;
      predicted += is_p ? 1 : 0;
      support += is_t ? 1 : 0;
    }
    const double prec = predicted > 0 ? tp / predicted : 0.0;
    const double rec = support > 0 ? tp / support : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    r.precision.push_back(prec);
    r.recall.push_back(rec);
    r.f1.push_back(f);
    r.macro_p += prec / K;
    r.macro_r += rec / K;
    r.macro_f1 += f / K;
    r.weighted_p += prec * support / n;
    r.weighted_r += rec * support / n;
    r.weighted_f1 += f * support / n;
  }
  return r;
}

// ARI from explicit enumeration of all unordered pairs.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0, only_a = 0, only_b = 0, neither = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      if (sa && sb) ++both;
      else if (sa) ++only_a;
      else if (sb) ++only_b;
      else ++neither;
    }
  }
  const double pairs = both + only_a + only_b + neither;
  const double same_a = both + only_a;
  const double same_b = both + only_b;
  const double expected = same_a * same_b / pairs;
  const double max_index = 0.5 * (same_a + same_b);
  if (max_index == expected) return only_a == 0 && only_b == 0 ? 1.0 : 0.0;
  return (both - expected) / (max_index - expected);
}

inline double dist(const Eigen::MatrixXd& X, std::size_t i, std::size_t j) {
  double s = 0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double v = X(static_cast<Eigen::Index>(i), c) - X(static_cast<Eigen::Index>(j), c);
    s += v * v;
  }
  return std::sqrt(s);
}

inline double silhouette(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  std::set<int> clusters(labels.begin(), labels.end());
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double own_sum = 0;
    std::size_t own_n = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) {
        own_sum += dist(X, i, j);
        ++own_n;
      }
    }
    if (own_n == 0) continue;
    const double a = own_sum / static_cast<double>(own_n);
    double b = 1e300;
    for (int c : clusters) {
      if (c == labels[i]) continue;
      double s = 0;
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] == c) {
          s += dist(X, i, j);
          ++m;
        }
      }
      b = std::min(b, s / static_cast<double>(m));
    }
    total += std::max(a, b) == 0 ? 0 : (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

// rank of j among i's neighbours: 1 + number of points strictly closer, or
// equally close with a smaller index.
inline std::size_t rank(const Eigen::MatrixXd& X, std::size_t i, std::size_t j) {
  const double dij = dist(X, i, j);
  std::size_t r = 1;
  for (std::size_t l = 0; l < static_cast<std::size_t>(X.rows()); ++l) {
    if (l == i || l == j) continue;
    const double dil = dist(X, i, l);
    if (dil < dij || (dil == dij && l < j)) ++r;
  }
  return r;
}

inline double trustworthiness(const Eigen::MatrixXd& high, const Eigen::MatrixXd& low, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(high.rows());
  double penalty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (rank(low, i, j) <= k && rank(high, i, j) > k) penalty += static_cast<double>(rank(high, i, j) - k);
    }
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2 * nd - 3 * kd - 1)) * penalty;
}

}  // namespace oracle
