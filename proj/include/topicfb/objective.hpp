// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>

#include <Eigen/Core>

#include "topicfb/model.hpp"

namespace topicfb {

struct Hyperparams {
  double beta_u = 0.1;   // L1 strength on a and b
  double beta_g = 10.0;  // squared-difference smoothness on trend rows
  int max_iters = 5000;
  double tol = 1e-8;     // relative objective change

  /// Throws UsageError on negative strengths or non-positive tolerance.
  void validate() const;
};

/// Weighted log-likelihood sum_n w_n log P[Y = y_n].
template <typename Scalar>
Scalar log_likelihood(const ModelParams<Scalar>& params, const FeatureConfig& config,
                      const Design& design) {
  Scalar total(0);
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    if (design.weight(r) == 0.0) continue;
    total += Scalar(design.weight(r)) *
             log_prob(linear_predictor(params, config, design, r), design.label(r));
  }
  return total;
}

/// sum_i |a_i| + |b|.
template <typename Scalar>
Scalar l1_penalty(const ModelParams<Scalar>& params) {
  using std::abs;
  return params.a.cwiseAbs().sum() + abs(params.b);
}

/// sum_k sum_j (g_{k,j+1} - g_{k,j})^2.
template <typename Scalar>
Scalar smoothness_penalty(const ModelParams<Scalar>& params) {
  const auto m = params.g.cols();
  if (m < 2) return Scalar(0);
  return (params.g.rightCols(m - 1) - params.g.leftCols(m - 1)).squaredNorm();
}

/// Differentiable part: log-likelihood minus the smoothness penalty.
template <typename Scalar>
Scalar smooth_objective(const ModelParams<Scalar>& params, const Design& design,
                        const FeatureConfig& config, const Hyperparams& hyper) {
  return log_likelihood(params, config, design) -
         Scalar(hyper.beta_g) * smoothness_penalty(params);
}

/// Regularized log-likelihood that fit() maximizes.
template <typename Scalar>
Scalar objective(const ModelParams<Scalar>& params, const Design& design,
                 const FeatureConfig& config, const Hyperparams& hyper) {
  return smooth_objective(params, design, config, hyper) -
         Scalar(hyper.beta_u) * l1_penalty(params);
}

/// Gradient of smooth_objective(). Slots of inactive features are zero.
ModelParamsd smooth_gradient(const ModelParamsd& params, const Design& design,
                             const FeatureConfig& config, const Hyperparams& hyper);

/// smooth_objective() and its gradient in a single pass over the data. When
/// `curvature` is non-null it receives the diagonal of the negative Hessian.
double smooth_value_and_gradient(const ModelParamsd& params, const Design& design,
                                 const FeatureConfig& config, const Hyperparams& hyper,
                                 ModelParamsd& gradient, ModelParamsd* curvature = nullptr);

inline double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

/// Flat parameter vector layout [a (N), b, g (K x M, row-major), alpha (N)].
struct ParamLayout {
  int num_users = 0;
  int num_topics = 0;
  int num_days = 0;

  static ParamLayout of(const Design& design) {
    return {design.num_users, design.num_topics, design.num_days};
  }

  Eigen::Index size() const {
    return 2 * Eigen::Index(num_users) + 1 + Eigen::Index(num_topics) * num_days;
  }
  Eigen::Index b_offset() const { return num_users; }
  Eigen::Index g_offset() const { return num_users + 1; }
  Eigen::Index alpha_offset() const {
    return g_offset() + Eigen::Index(num_topics) * num_days;
  }

  Eigen::VectorXd pack(const ModelParamsd& params) const;
  ModelParamsd unpack(const Eigen::VectorXd& flat) const;

  /// 1 for parameters of active features, 0 for pinned ones.
  Eigen::VectorXd active_mask(const FeatureConfig& config) const;
  /// 1 for L1-penalized parameters (a and b).
  Eigen::VectorXd l1_mask() const;
};

}  // namespace topicfb
