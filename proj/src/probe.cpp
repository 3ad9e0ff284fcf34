#include "narrprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "narrprobe/error.hpp"
#include "narrprobe/lbfgs.hpp"
#include "narrprobe/rng.hpp"

namespace narrprobe {

namespace {

void check_labels(std::span<const int> y, std::size_t num_classes) {
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " outside 0.." +
                                                  std::to_string(num_classes - 1));
    }
  }
}

std::vector<std::string> default_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

}  // namespace

Split stratified_split(std::span<const int> y, std::size_t num_classes, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  if (y.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples to split");
  check_labels(y, num_classes);

  const std::size_t n = y.size();
  // The epsilon absorbs products like 0.7 * 10 = 6.9999...
  const auto train_total = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));

  Rng rng(spec.seed);
  Split split;
  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_total));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_total), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
  }

  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(y[i])].push_back(i);

  std::vector<std::size_t> take(num_classes, 0);
  std::vector<double> remainder(num_classes, 0.0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double quota = spec.train_fraction * static_cast<double>(members[c].size());
    take[c] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainder[c] = quota - static_cast<double>(take[c]);
    assigned += take[c];
  }
  std::vector<std::size_t> by_remainder(num_classes);
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < train_total && i < num_classes; ++i) {
    const std::size_t c = by_remainder[i];
    if (take[c] < members[c].size()) {
      ++take[c];
      ++assigned;
    }
  }

  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t size = members[c].size();
    if (size == 0) continue;
    if (size == 1) {
      if (take[c] == 0) {
        take[c] = 1;
        split.warnings.push_back("class " + std::to_string(c) + " has a single sample; it goes to train");
      }
    } else if (take[c] == 0 || take[c] == size) {
      throw Error(ErrorCode::DegenerateClass, "class " + std::to_string(c) + " with " + std::to_string(size) +
                                                  " samples would leave one side empty");
    }
    rng.shuffle(std::span(members[c]));
    split.train.insert(split.train.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(take[c]));
    split.test.insert(split.test.end(), members[c].begin() + static_cast<std::ptrdiff_t>(take[c]), members[c].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<double> balanced_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "no classes");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double k = static_cast<double>(counts.size());
  std::vector<double> weights;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw Error(ErrorCode::ZeroCount, "class " + std::to_string(c) + " has no samples");
    weights.push_back(total / (k * static_cast<double>(counts[c])));
  }
  return weights;
}

ProbeModel zero_model(std::size_t num_classes, std::size_t dim, std::vector<std::string> class_names) {
  ProbeModel m;
  m.W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(dim));
  m.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
  m.class_names = class_names.empty() ? default_names(num_classes) : std::move(class_names);
  return m;
}

Eigen::VectorXd predict_proba(const ProbeModel& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd z = m.W * x + m.b;
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

Eigen::MatrixXd predict_proba(const ProbeModel& m, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X * m.W.transpose();
  Z.rowwise() += m.b.transpose();
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    Z.row(i).array() -= Z.row(i).maxCoeff();
    Z.row(i) = Z.row(i).array().exp();
    Z.row(i) /= Z.row(i).sum();
  }
  return Z;
}

std::vector<int> predict(const ProbeModel& m, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd P = predict_proba(m, X);
  std::vector<int> out(static_cast<std::size_t>(P.rows()));
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < P.cols(); ++c) {
      if (P(i, c) > P(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

LossGradient loss_and_gradient(const ProbeModel& m, const Eigen::MatrixXd& X, std::span<const int> y,
                               const TrainConfig& cfg) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "X has " + std::to_string(X.rows()) + " rows for " +
                                               std::to_string(y.size()) + " labels");
  }
  if (X.cols() != m.W.cols()) throw Error(ErrorCode::DimMismatch, "X and W disagree on dimension");
  if (y.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  const std::size_t k = m.num_classes();
  check_labels(y, k);
  if (!cfg.class_weights.empty() && cfg.class_weights.size() != k) {
    throw Error(ErrorCode::InvalidArgument, "class_weights size differs from class count");
  }

  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd G = X * m.W.transpose();
  G.rowwise() += m.b.transpose();

  double data_term = 0.0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const auto target = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    const double w = cfg.class_weights.empty() ? 1.0 : cfg.class_weights[static_cast<std::size_t>(target)];
    const double top = G.row(i).maxCoeff();
    const double lse = top + std::log((G.row(i).array() - top).exp().sum());
    const double log_p = G(i, target) - lse;
    if (!std::isfinite(log_p) || std::exp(log_p) == 0.0) {
      throw Error(ErrorCode::NonFiniteLoss, "target probability underflows for sample " + std::to_string(i));
    }
    data_term += w * -log_p;
    G.row(i) = (G.row(i).array() - lse).exp();
    G(i, target) -= 1.0;
    G.row(i) *= w / n;
  }

  LossGradient out;
  out.loss = data_term / n + cfg.l2_lambda / (2.0 * n) * m.W.squaredNorm();
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite");
  out.grad_W = G.transpose() * X + (cfg.l2_lambda / n) * m.W;
  out.grad_b = G.colwise().sum().transpose();
  return out;
}

TrainResult train(const Eigen::MatrixXd& X, std::span<const int> y, std::size_t num_classes,
                  const TrainConfig& cfg, std::vector<std::string> class_names) {
  if (cfg.l2_lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "l2_lambda must be >= 0");
  check_labels(y, num_classes);
  std::vector<bool> present(num_classes, false);
  for (int label : y) present[static_cast<std::size_t>(label)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw Error(ErrorCode::InvalidArgument, "training labels contain fewer than two classes");
  }

  const auto k = static_cast<Eigen::Index>(num_classes);
  const auto d = X.cols();
  ProbeModel model = zero_model(num_classes, static_cast<std::size_t>(d), std::move(class_names));

  // Parameters are packed as W row-major, then b.
  auto unpack = [&](const Eigen::VectorXd& theta, ProbeModel& into) {
    for (Eigen::Index c = 0; c < k; ++c) into.W.row(c) = theta.segment(c * d, d).transpose();
    into.b = theta.tail(k);
  };
  ProbeModel scratch = model;
  Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    unpack(theta, scratch);
    LossGradient lg;
    try {
      lg = loss_and_gradient(scratch, X, y, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteLoss) throw;
      return std::numeric_limits<double>::infinity();
    }
    for (Eigen::Index c = 0; c < k; ++c) grad.segment(c * d, d) = lg.grad_W.row(c).transpose();
    grad.tail(k) = lg.grad_b;
    return lg.loss;
  };

  LbfgsOptions options;
  options.max_iterations = cfg.max_iterations;
  options.grad_tolerance = cfg.grad_tolerance;
  options.memory = cfg.lbfgs_memory;
  LbfgsResult solved = minimize_lbfgs(objective, Eigen::VectorXd::Zero(k * d + k), options);

  unpack(solved.x, model);
  TrainResult result;
  result.model = std::move(model);
  result.converged = solved.converged;
  result.line_search_failed = solved.line_search_failed;
  result.iterations = solved.iterations;
  result.final_loss = solved.value;
  result.grad_inf_norm = solved.gradient.lpNorm<Eigen::Infinity>();
  result.loss_trace = std::move(solved.trace);
  return result;
}

Eigen::MatrixXd control_embeddings(std::size_t rows, std::size_t dim, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::BadSigma, "sigma must be finite and positive");
  }
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = sigma * rng.gaussian();
  }
  return out;
}

double embedding_sigma(const Eigen::MatrixXd& X) {
  if (X.size() == 0) throw Error(ErrorCode::EmptyMatrix, "no entries");
  // Welford, row by row.
  double mean = 0.0;
  double m2 = 0.0;
  double count = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      count += 1.0;
      const double delta = X(r, c) - mean;
      mean += delta / count;
      m2 += delta * (X(r, c) - mean);
    }
  }
  return std::sqrt(m2 / count);
}

std::string model_to_json(const ProbeModel& m, const TrainConfig& cfg, const TrainResult& result) {
  nlohmann::ordered_json j;
  j["dim"] = m.dim();
  j["classes"] = m.class_names;
  nlohmann::json W = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.W.rows(); ++c) {
    std::vector<double> row(static_cast<std::size_t>(m.W.cols()));
    for (Eigen::Index i = 0; i < m.W.cols(); ++i) row[static_cast<std::size_t>(i)] = m.W(c, i);
    W.push_back(row);
  }
  j["W"] = std::move(W);
  j["b"] = std::vector<double>(m.b.data(), m.b.data() + m.b.size());
  nlohmann::ordered_json config;
  config["max_iterations"] = cfg.max_iterations;
  config["grad_tolerance"] = cfg.grad_tolerance;
  config["l2_lambda"] = cfg.l2_lambda;
  config["lbfgs_memory"] = cfg.lbfgs_memory;
  config["class_weights"] = cfg.class_weights;
  config["seed"] = cfg.seed;
  nlohmann::ordered_json training;
  training["config"] = std::move(config);
  training["converged"] = result.converged;
  training["line_search_failed"] = result.line_search_failed;
  training["iterations"] = result.iterations;
  training["final_loss"] = result.final_loss;
  training["grad_inf_norm"] = result.grad_inf_norm;
  j["training"] = std::move(training);
  return j.dump(1) + "\n";
}

ProbeModel model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto dim = j.at("dim").get<std::size_t>();
    auto names = j.at("classes").get<std::vector<std::string>>();
    const auto& W = j.at("W");
    const auto b = j.at("b").get<std::vector<double>>();
    if (W.size() != names.size() || b.size() != names.size()) {
      throw Error(ErrorCode::InvalidArgument, "model class count is inconsistent");
    }
    ProbeModel m = zero_model(names.size(), dim, names);
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto row = W.at(c).get<std::vector<double>>();
      if (row.size() != dim) throw Error(ErrorCode::DimMismatch, "model row has the wrong length");
      for (std::size_t i = 0; i < dim; ++i) m.W(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = row[i];
      m.b(static_cast<Eigen::Index>(c)) = b[c];
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("model file: ") + e.what());
  }
}

}  // namespace narrprobe
