#include "narrprobe/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "narrprobe/error.hpp"

namespace narrprobe {

namespace {

struct Trial {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

struct LineSearch {
  const Objective& objective;
  const LbfgsOptions& options;
  const Eigen::VectorXd& x0;
  const Eigen::VectorXd& direction;
  double f0;
  double slope0;
  std::size_t evals = 0;

  Trial eval(double step) {
    ++evals;
    Trial t;
    t.step = step;
    t.x = x0 + step * direction;
    t.grad.resize(x0.size());
    t.value = objective(t.x, t.grad);
    if (!std::isfinite(t.value)) {
      t.value = std::numeric_limits<double>::infinity();
      t.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
      t.slope = t.grad.dot(direction);
    }
    return t;
  }

  bool armijo(const Trial& t) const { return t.value <= f0 + options.wolfe_c1 * t.step * slope0; }
  bool curvature(const Trial& t) const { return std::abs(t.slope) <= -options.wolfe_c2 * slope0; }

  // Safeguarded cubic interpolation between lo and hi, bisection fallback.
  static double interpolate(const Trial& lo, const Trial& hi) {
    const double mid = 0.5 * (lo.step + hi.step);
    if (!std::isfinite(hi.value) || !std::isfinite(hi.slope)) return mid;
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (lo.step - hi.step);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    if (disc < 0.0) return mid;
    const double d2 = std::copysign(std::sqrt(disc), hi.step - lo.step);
    const double step =
        hi.step - (hi.step - lo.step) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    const double a = std::min(lo.step, hi.step);
    const double b = std::max(lo.step, hi.step);
    const double margin = 0.1 * (b - a);
    if (!std::isfinite(step) || step < a + margin || step > b - margin) return mid;
    return step;
  }

  std::optional<Trial> zoom(Trial lo, Trial hi) {
    while (evals < options.max_line_search_evals) {
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, lo.step)) break;
      Trial t = eval(interpolate(lo, hi));
      if (!armijo(t) || t.value >= lo.value) {
        hi = std::move(t);
        continue;
      }
      if (curvature(t)) return t;
      if (t.slope * (hi.step - lo.step) >= 0.0) hi = std::move(lo);
      lo = std::move(t);
    }
    // Out of budget: a point with sufficient decrease is still progress.
    if (lo.step > 0.0) return lo;
    return std::nullopt;
  }

  std::optional<Trial> run(double initial_step) {
    Trial prev;
    prev.step = 0.0;
    prev.value = f0;
    prev.slope = slope0;
    prev.x = x0;
    double step = initial_step;
    for (bool first = true; evals < options.max_line_search_evals; first = false) {
      Trial t = eval(step);
      if (!armijo(t) || (!first && t.value >= prev.value)) return zoom(std::move(prev), std::move(t));
      if (curvature(t)) return t;
      if (t.slope >= 0.0) return zoom(std::move(t), std::move(prev));
      prev = std::move(t);
      step *= 2.0;
    }
    if (prev.step > 0.0) return prev;
    return std::nullopt;
  }
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  result.gradient.resize(result.x.size());
  result.value = objective(result.x, result.gradient);
  if (!std::isfinite(result.value)) throw Error(ErrorCode::NonFiniteLoss, "objective is not finite at the start point");
  result.trace.push_back(result.value);

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(options.memory);

  while (true) {
    if (result.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;

    // Two-loop recursion.
    Eigen::VectorXd q = result.gradient;
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += s_hist[i] * (alpha[i] - beta);
    }
    Eigen::VectorXd direction = -q;
    double slope = result.gradient.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -result.gradient;
      slope = -result.gradient.squaredNorm();
    }

    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / result.gradient.norm()) : 1.0;
    LineSearch search{objective, options, result.x, direction, result.value, slope};
    std::optional<Trial> accepted = search.run(initial_step);
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }

    Eigen::VectorXd s = accepted->x - result.x;
    Eigen::VectorXd y = accepted->grad - result.gradient;
    const double sy = s.dot(y);
    result.x = std::move(accepted->x);
    result.gradient = std::move(accepted->grad);
    result.value = accepted->value;
    result.trace.push_back(result.value);
    ++result.iterations;

    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0 && options.memory > 0) {
      if (s_hist.size() == options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
  }
  return result;
}

}  // namespace narrprobe
