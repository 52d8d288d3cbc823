// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/objective.hpp"

#include <cmath>

#include "topicfb/error.hpp"

namespace topicfb {

void Hyperparams::validate() const {
  if (!(beta_u >= 0.0)) throw UsageError("beta_u must be >= 0");
  if (!(beta_g >= 0.0)) throw UsageError("beta_g must be >= 0");
  if (!(tol > 0.0)) throw UsageError("tol must be > 0");
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
}

double smooth_value_and_gradient(const ModelParamsd& params, const Design& design,
                                 const FeatureConfig& config, const Hyperparams& hyper,
                                 ModelParamsd& grad, ModelParamsd* curvature) {
  check_dims(params, design);
  grad = ModelParamsd::Zero(design.num_users, design.num_topics, design.num_days);
  const Eigen::Index n = design.rows();
  Eigen::ArrayXd eta(n);
  for (Eigen::Index r = 0; r < n; ++r) eta(r) = linear_predictor(params, config, design, r);
  // log S(+-eta) and S(eta) from a single exponential per row.
  const Eigen::ArrayXd e = (-eta.abs()).exp();
  const Eigen::ArrayXd inv = (1.0 + e).inverse();
  const Eigen::ArrayXd p = (eta >= 0.0).select(inv, e * inv);
  const Eigen::ArrayXd y = design.label.cast<double>().array();
  const Eigen::ArrayXd w = design.weight.array();
  const Eigen::ArrayXd margin = (2.0 * y - 1.0) * eta;
  double value = -(w * ((-margin).max(0.0) + (1.0 + e).log())).sum();
  const Eigen::ArrayXd resid = w * (y - p);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int u = design.user[r];
    if (config.use_propensity) grad.a(u) += resid(r);
    if (config.use_preference) grad.b += resid(r) * design.pref(r);
    if (config.use_trend) grad.g(design.topic[r], design.day[r]) += resid(r);
    if (config.use_feedback) grad.alpha(u) += resid(r) * design.feedback(r);
  }
  if (curvature) {
    auto& c = *curvature;
    c = ModelParamsd::Zero(design.num_users, design.num_topics, design.num_days);
    const Eigen::ArrayXd v = w * p * (1.0 - p);
    for (Eigen::Index r = 0; r < n; ++r) {
      const int u = design.user[r];
      if (config.use_propensity) c.a(u) += v(r);
      if (config.use_preference) c.b += v(r) * design.pref(r) * design.pref(r);
      if (config.use_trend) c.g(design.topic[r], design.day[r]) += v(r);
      if (config.use_feedback) c.alpha(u) += v(r) * design.feedback(r) * design.feedback(r);
    }
    const auto m = params.g.cols();
    if (config.use_trend && m > 1) {
      c.g.leftCols(m - 1).array() += 2.0 * hyper.beta_g;
      c.g.rightCols(m - 1).array() += 2.0 * hyper.beta_g;
    }
  }
  if (config.use_trend && params.g.cols() > 1 && hyper.beta_g > 0.0) {
    const auto m = params.g.cols();
    const Eigen::MatrixXd diff = params.g.rightCols(m - 1) - params.g.leftCols(m - 1);
    value -= hyper.beta_g * diff.squaredNorm();
    // d/dg_j of -beta (g_{j+1} - g_j)^2 is +2 beta (g_{j+1} - g_j), and the
    // same term pushes g_{j+1} by -2 beta (g_{j+1} - g_j).
    grad.g.leftCols(m - 1) += 2.0 * hyper.beta_g * diff;
    grad.g.rightCols(m - 1) -= 2.0 * hyper.beta_g * diff;
  }
  return value;
}

ModelParamsd smooth_gradient(const ModelParamsd& params, const Design& design,
                             const FeatureConfig& config, const Hyperparams& hyper) {
  ModelParamsd grad;
  smooth_value_and_gradient(params, design, config, hyper, grad);
  return grad;
}

Eigen::VectorXd ParamLayout::pack(const ModelParamsd& params) const {
  Eigen::VectorXd flat(size());
  flat.head(num_users) = params.a;
  flat(b_offset()) = params.b;
  for (int k = 0; k < num_topics; ++k) {
    flat.segment(g_offset() + Eigen::Index(k) * num_days, num_days) =
        params.g.row(k).transpose();
  }
  flat.tail(num_users) = params.alpha;
  return flat;
}

ModelParamsd ParamLayout::unpack(const Eigen::VectorXd& flat) const {
  ModelParamsd p = ModelParamsd::Zero(num_users, num_topics, num_days);
  p.a = flat.head(num_users);
  p.b = flat(b_offset());
  for (int k = 0; k < num_topics; ++k) {
    p.g.row(k) = flat.segment(g_offset() + Eigen::Index(k) * num_days, num_days).transpose();
  }
  p.alpha = flat.tail(num_users);
  return p;
}

Eigen::VectorXd ParamLayout::active_mask(const FeatureConfig& config) const {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(size());
  if (config.use_propensity) mask.head(num_users).setOnes();
  if (config.use_preference) mask(b_offset()) = 1.0;
  if (config.use_trend) mask.segment(g_offset(), Eigen::Index(num_topics) * num_days).setOnes();
  if (config.use_feedback) mask.tail(num_users).setOnes();
  return mask;
}

Eigen::VectorXd ParamLayout::l1_mask() const {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(size());
  mask.head(num_users + 1).setOnes();
  return mask;
}

}  // namespace topicfb
