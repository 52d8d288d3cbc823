// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/model.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "topicfb/error.hpp"

namespace topicfb {

std::string FeatureConfig::name() const {
  std::vector<std::string> parts;
  if (use_propensity) parts.emplace_back("prop");
  if (use_preference) parts.emplace_back("pref");
  if (use_trend) parts.emplace_back("trend");
  if (use_feedback) parts.emplace_back("feedback");
  if (parts.empty()) return "none";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "," + parts[i];
  return out;
}

bool operator==(const FeatureConfig& lhs, const FeatureConfig& rhs) {
  return lhs.use_propensity == rhs.use_propensity &&
         lhs.use_preference == rhs.use_preference &&
         lhs.use_trend == rhs.use_trend && lhs.use_feedback == rhs.use_feedback &&
         lhs.feedback_fn == rhs.feedback_fn;
}

FeatureConfig parse_features(std::string_view list, FeedbackFunctionKind fn) {
  FeatureConfig config;
  config.feedback_fn = fn;
  std::string token;
  std::stringstream ss{std::string(list)};
  while (std::getline(ss, token, ',')) {
    token.erase(std::remove_if(token.begin(), token.end(), ::isspace), token.end());
    if (token.empty() || token == "none") continue;
    if (token == "prop") {
      config.use_propensity = true;
    } else if (token == "pref") {
      config.use_preference = true;
    } else if (token == "trend") {
      config.use_trend = true;
    } else if (token == "feedback" || token == "fb") {
      config.use_feedback = true;
    } else {
      throw UsageError("unknown feature '" + token +
                       "' (expected prop, pref, trend, feedback or none)");
    }
  }
  return config;
}

double logit(double p) {
  const double q = std::clamp(p, kLogitEpsilon, 1.0 - kLogitEpsilon);
  return std::log(q) - std::log1p(-q);
}

Eigen::MatrixXi training_topic_counts(const Dataset& ds, std::span<const char> train_mask) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(ds.num_users, ds.num_topics);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!train_mask[i]) continue;
    ++counts(ds.samples[i].user_idx, ds.samples[i].topic_idx);
  }
  return counts;
}

TopicPreferenceTable topic_preference(const Eigen::MatrixXi& counts, int num_topics) {
  if (counts.cols() != num_topics) {
    throw std::invalid_argument("topic_preference: counts must have K columns");
  }
  TopicPreferenceTable table;
  const Eigen::MatrixXd n = counts.cast<double>();
  const Eigen::VectorXd totals = n.rowwise().sum();
  table.probability = (n.array() + 1.0).colwise() / (totals.array() + num_topics);
  table.x = table.probability.unaryExpr([](double p) { return logit(p); });
  return table;
}

Design make_design(const Dataset& ds, const FeatureConfig& config,
                   const TopicPreferenceTable& pref,
                   const FeedbackFeatures& feedback,
                   std::span<const std::size_t> rows) {
  std::vector<std::size_t> kept;
  kept.reserve(rows.size());
  for (auto i : rows) {
    if (config.use_feedback && !feedback.valid[i]) continue;
    kept.push_back(i);
  }
  Design d;
  d.num_users = ds.num_users;
  d.num_topics = ds.num_topics;
  d.num_days = ds.num_days;
  const auto n = static_cast<Eigen::Index>(kept.size());
  d.user.resize(kept.size());
  d.topic.resize(kept.size());
  d.day.resize(kept.size());
  d.pref.resize(n);
  d.feedback.resize(n);
  d.label.resize(n);
  d.weight = Eigen::VectorXd::Ones(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = ds.samples[kept[r]];
    d.user[r] = s.user_idx;
    d.topic[r] = s.topic_idx;
    d.day[r] = s.day_idx;
    d.pref(r) = pref.x.size() ? pref.x(s.user_idx, s.topic_idx) : 0.0;
    d.feedback(r) = feedback.valid.empty() || !feedback.valid[kept[r]]
                        ? 0.0
                        : feedback.value[kept[r]];
    d.label(r) = s.label;
  }
  d.sample_index = std::move(kept);
  return d;
}

template <typename Scalar>
void check_dims(const ModelParams<Scalar>& params, const Design& design) {
  if (params.num_users() != design.num_users ||
      params.alpha.size() != design.num_users ||
      params.num_topics() != design.num_topics ||
      params.num_days() != design.num_days) {
    std::ostringstream msg;
    msg << "dimension mismatch: parameters are (N=" << params.num_users()
        << ", K=" << params.num_topics() << ", M=" << params.num_days()
        << ") but the data has (N=" << design.num_users << ", K=" << design.num_topics
        << ", M=" << design.num_days << ")";
    throw DataError(msg.str());
  }
}

template void check_dims<double>(const ModelParams<double>&, const Design&);
template void check_dims<long double>(const ModelParams<long double>&, const Design&);

double linear_predictor(const ModelParamsd& params, const FeatureConfig& config,
                        const Sample& sample, const TopicPreferenceTable& pref,
                        double f) {
  if (sample.user_idx < 0 || sample.user_idx >= params.num_users() ||
      sample.topic_idx < 0 || sample.topic_idx >= params.num_topics() ||
      sample.day_idx < 0 || sample.day_idx >= params.num_days()) {
    throw std::out_of_range("linear_predictor: sample index out of range");
  }
  const double x = config.use_preference ? pref.x(sample.user_idx, sample.topic_idx) : 0.0;
  return linear_predictor(params, config, sample.user_idx, sample.topic_idx,
                          sample.day_idx, x, f);
}

Eigen::VectorXd predict(const ModelParamsd& params, const FeatureConfig& config,
                        const Design& design) {
  check_dims(params, design);
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  Eigen::VectorXd p(design.rows());
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    p(r) = std::clamp(logistic(linear_predictor(params, config, design, r)), lo, hi);
  }
  return p;
}

}  // namespace topicfb
