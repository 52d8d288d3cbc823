// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "topicfb/error.hpp"

namespace topicfb {

namespace {

constexpr double kCurvatureFloor = 1e-10;
// The metric follows the local curvature but never drops below this
// fraction of the global bound; near-separable users then take long steps.
constexpr double kMetricFloor = 1e-9;
constexpr double kMaxStepScale = 64.0;
constexpr double kMinStepScale = 1e-12;
constexpr double kStepGrowth = 1.5;

}  // namespace

Eigen::VectorXd curvature_bound(const Design& design, const FeatureConfig& config,
                                const Hyperparams& hyper) {
  const auto layout = ParamLayout::of(design);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.size());
  // For the logistic likelihood -H = X' W X with W <= 1/4, and
  // X' X <= diag(sum_n |x_nj| s_n) with s_n the absolute row sum of X.
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const double w = design.weight(r);
    if (w == 0.0) continue;
    const double x = std::abs(design.pref(r));
    const double f = std::abs(design.feedback(r));
    const double s = (config.use_propensity ? 1.0 : 0.0) +
                     (config.use_preference ? x : 0.0) +
                     (config.use_trend ? 1.0 : 0.0) + (config.use_feedback ? f : 0.0);
    const double c = 0.25 * w * s;
    const int u = design.user[r];
    if (config.use_propensity) d(u) += c;
    if (config.use_preference) d(layout.b_offset()) += c * x;
    if (config.use_trend) {
      d(layout.g_offset() + Eigen::Index(design.topic[r]) * layout.num_days +
        design.day[r]) += c;
    }
    if (config.use_feedback) d(layout.alpha_offset() + u) += c * f;
  }
  // 2 beta_g L'L, bounded by its absolute row sums (2 at the ends, 4 inside).
  if (config.use_trend && layout.num_days > 1) {
    for (int k = 0; k < layout.num_topics; ++k) {
      for (int j = 0; j < layout.num_days; ++j) {
        const bool end = j == 0 || j == layout.num_days - 1;
        d(layout.g_offset() + Eigen::Index(k) * layout.num_days + j) +=
            2.0 * hyper.beta_g * (end ? 2.0 : 4.0);
      }
    }
  }
  return d.cwiseMax(kCurvatureFloor);
}

bool trace_monotone(const std::vector<double>& trace, double tol) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] < trace[i - 1] - tol * std::max(1.0, std::abs(trace[i - 1]))) return false;
  }
  return true;
}

FitResult fit(const Design& design, const FeatureConfig& config, const Hyperparams& hyper,
              const ModelParamsd& init) {
  hyper.validate();
  check_dims(init, design);
  if (design.rows() == 0) throw DataError("fit: no samples");

  const auto layout = ParamLayout::of(design);
  const Eigen::VectorXd active = layout.active_mask(config);
  const Eigen::VectorXd l1 = layout.l1_mask().cwiseProduct(active);
  const Eigen::VectorXd floor = kMetricFloor * curvature_bound(design, config, hyper);

  // A point with its smooth value, gradient and metric.
  struct Point {
    Eigen::VectorXd theta;
    double smooth = 0.0;
    Eigen::VectorXd grad;
    Eigen::VectorXd metric;
  };
  ModelParamsd grad_params, curv_params;
  auto evaluate = [&](Point& pt) {
    pt.smooth = smooth_value_and_gradient(layout.unpack(pt.theta), design, config, hyper,
                                          grad_params, &curv_params);
    pt.grad = layout.pack(grad_params).cwiseProduct(active);
    pt.metric = layout.pack(curv_params).cwiseMax(floor);
  };
  auto penalty = [&](const Eigen::VectorXd& v) {
    return hyper.beta_u * v.cwiseProduct(l1).cwiseAbs().sum();
  };

  // x: current iterate, whose objective the trace records. y: extrapolated
  // point the step is taken from. z: candidate.
  Point x;
  x.theta = layout.pack(init).cwiseProduct(active);
  evaluate(x);
  double value = x.smooth - penalty(x.theta);
  if (!std::isfinite(value)) throw NumericalError("fit: non-finite initial objective");
  Point y = x, z;
  z.theta.resize(x.theta.size());
  double momentum = 1.0;

  FitResult result;
  result.objective_trace.push_back(value);
  double scale = 1.0;
  for (int iter = 1; iter <= hyper.max_iters; ++iter) {
    result.iterations = iter;
    scale = std::min(scale * kStepGrowth, kMaxStepScale);
    while (true) {
      for (Eigen::Index j = 0; j < y.theta.size(); ++j) {
        if (active(j) == 0.0) {
          z.theta(j) = 0.0;
          continue;
        }
        const double step = scale / y.metric(j);
        const double v = y.theta(j) + step * y.grad(j);
        z.theta(j) = l1(j) != 0.0 ? soft_threshold(v, step * hyper.beta_u) : v;
      }
      evaluate(z);
      const Eigen::VectorXd delta = z.theta - y.theta;
      const double model =
          y.smooth + y.grad.dot(delta) - 0.5 / scale * delta.cwiseAbs2().dot(y.metric);
      // Allow for rounding in the likelihood sum.
      const double slack = 1e-12 * std::max(1.0, std::abs(y.smooth));
      if (std::isfinite(z.smooth) && z.smooth >= model - slack) break;
      scale *= 0.5;
      if (scale < kMinStepScale) {
        std::ostringstream msg;
        msg << "fit: line search failed at iteration " << iter << " (objective " << value
            << ")";
        throw NumericalError(msg.str());
      }
    }
    const double z_value = z.smooth - penalty(z.theta);
    if (!std::isfinite(z_value)) {
      std::ostringstream msg;
      msg << "fit: non-finite objective at iteration " << iter;
      throw NumericalError(msg.str());
    }
    if (z_value < value) {
      // The extrapolation overshot: drop the momentum and step from x. A
      // step from x itself cannot lose ground beyond rounding.
      result.objective_trace.push_back(value);
      if (momentum == 1.0) {
        result.converged = true;
        break;
      }
      momentum = 1.0;
      y = x;
      continue;
    }
    const double change = (z_value - value) / std::max(1.0, std::abs(value));
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    momentum = next_momentum;
    value = z_value;
    result.objective_trace.push_back(value);
    if (beta == 0.0) {
      y = z;
    } else {
      y.theta = z.theta + beta * (z.theta - x.theta);
      evaluate(y);
    }
    std::swap(x, z);
    if (change < hyper.tol) {
      result.converged = true;
      break;
    }
  }
  result.params = layout.unpack(x.theta);
  return result;
}

FitResult fit(const Design& design, const FeatureConfig& config, const Hyperparams& hyper) {
  return fit(design, config, hyper,
             ModelParamsd::Zero(design.num_users, design.num_topics, design.num_days));
}

}  // namespace topicfb
