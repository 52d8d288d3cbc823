// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "topicfb/data_model.hpp"
#include "topicfb/feedback_transform.hpp"

namespace topicfb {

/// Parameters of the topic-continuation model
///   P[Y = 1] = S(a_i + b x_i(k) + g_{k,day} + alpha_i f).
template <typename Scalar>
struct ModelParams {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector a;      // N, per-user propensity
  Scalar b{0};   // topic-preference weight
  Matrix g;      // K x M, topic trend per day
  Vector alpha;  // N, per-user susceptibility

  static ModelParams Zero(int num_users, int num_topics, int num_days) {
    ModelParams p;
    p.a = Vector::Zero(num_users);
    p.b = Scalar(0);
    p.g = Matrix::Zero(num_topics, num_days);
    p.alpha = Vector::Zero(num_users);
    return p;
  }

  int num_users() const { return static_cast<int>(a.size()); }
  int num_topics() const { return static_cast<int>(g.rows()); }
  int num_days() const { return static_cast<int>(g.cols()); }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> p;
    p.a = a.template cast<Other>();
    p.b = static_cast<Other>(b);
    p.g = g.template cast<Other>();
    p.alpha = alpha.template cast<Other>();
    return p;
  }

  bool allFinite() const {
    using std::isfinite;
    return a.allFinite() && isfinite(b) && g.allFinite() && alpha.allFinite();
  }
};

using ModelParamsd = ModelParams<double>;

template <typename Scalar>
bool operator==(const ModelParams<Scalar>& lhs, const ModelParams<Scalar>& rhs) {
  return lhs.a.size() == rhs.a.size() && lhs.g.rows() == rhs.g.rows() &&
         lhs.g.cols() == rhs.g.cols() && lhs.a == rhs.a && lhs.b == rhs.b &&
         lhs.g == rhs.g && lhs.alpha == rhs.alpha;
}

/// Which terms of the linear predictor are active. Parameters of inactive
/// terms are pinned to zero by the optimizer.
struct FeatureConfig {
  bool use_propensity = false;
  bool use_preference = false;
  bool use_trend = false;
  bool use_feedback = false;
  FeedbackFunctionKind feedback_fn = FeedbackFunctionKind::RatePercentile;

  static FeatureConfig Full(
      FeedbackFunctionKind fn = FeedbackFunctionKind::RatePercentile) {
    return {true, true, true, true, fn};
  }

  bool any() const {
    return use_propensity || use_preference || use_trend || use_feedback;
  }
  /// Comma separated feature list, e.g. "prop,pref,trend" or "none".
  std::string name() const;
};

bool operator==(const FeatureConfig& lhs, const FeatureConfig& rhs);

/// Parses "prop,pref,trend,feedback" (any subset, any order) or "none".
FeatureConfig parse_features(std::string_view list,
                             FeedbackFunctionKind fn = FeedbackFunctionKind::RatePercentile);

/// x_i(k) = logit(P_i(k)) with add-one smoothed P_i(k) = (N_i(k)+1)/(N_i+K).
struct TopicPreferenceTable {
  Eigen::MatrixXd probability;  // N x K
  Eigen::MatrixXd x;            // N x K
};

/// Numerically stable logistic function; saturates to exactly 0 or 1.
template <typename Scalar>
Scalar logistic(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return (x > Scalar(0) ? x : Scalar(0)) + log1p(exp(-abs(x)));
}

/// log P[Y = y] for a linear predictor eta.
template <typename Scalar>
Scalar log_prob(Scalar eta, int y) {
  return y == 1 ? -softplus(-eta) : -softplus(eta);
}

inline constexpr double kLogitEpsilon = 1e-12;

/// Inverse logistic with the argument clamped to [eps, 1 - eps].
double logit(double p);

/// Per-user topic tallies N_i(k) over the masked samples (previous-post
/// topics of the training samples).
Eigen::MatrixXi training_topic_counts(const Dataset& ds, std::span<const char> train_mask);

TopicPreferenceTable topic_preference(const Eigen::MatrixXi& counts, int num_topics);

/// Model inputs of a set of samples, laid out column-wise.
struct Design {
  int num_users = 0;
  int num_topics = 0;
  int num_days = 0;
  std::vector<int> user;
  std::vector<int> topic;
  std::vector<int> day;
  Eigen::VectorXd pref;      // x_i(k) of the sample
  Eigen::VectorXd feedback;  // f
  Eigen::VectorXi label;
  Eigen::VectorXd weight;    // likelihood multiplicity (bootstrap counts)
  std::vector<std::size_t> sample_index;  // row -> Dataset sample

  Eigen::Index rows() const { return label.size(); }
};

/// Rows `rows` of the dataset. When the configuration uses feedback, rows
/// with missing feedback are left out; otherwise their f is 0.
Design make_design(const Dataset& ds, const FeatureConfig& config,
                   const TopicPreferenceTable& pref,
                   const FeedbackFeatures& feedback,
                   std::span<const std::size_t> rows);

/// Throws DataError unless the parameter dimensions match the design.
template <typename Scalar>
void check_dims(const ModelParams<Scalar>& params, const Design& design);

template <typename Scalar>
Scalar linear_predictor(const ModelParams<Scalar>& params, const FeatureConfig& config,
                        int user, int topic, int day, double x, Scalar f) {
  Scalar eta(0);
  if (config.use_propensity) eta += params.a(user);
  if (config.use_preference) eta += params.b * Scalar(x);
  if (config.use_trend) eta += params.g(topic, day);
  if (config.use_feedback) eta += params.alpha(user) * f;
  return eta;
}

/// Linear predictor of one dataset sample with feature value f.
double linear_predictor(const ModelParamsd& params, const FeatureConfig& config,
                        const Sample& sample, const TopicPreferenceTable& pref,
                        double f);

template <typename Scalar>
Scalar linear_predictor(const ModelParams<Scalar>& params, const FeatureConfig& config,
                        const Design& design, Eigen::Index row) {
  return linear_predictor(params, config, design.user[row], design.topic[row],
                          design.day[row], design.pref(row), Scalar(design.feedback(row)));
}

/// Continuation probability of every design row.
Eigen::VectorXd predict(const ModelParamsd& params, const FeatureConfig& config,
                        const Design& design);

}  // namespace topicfb
