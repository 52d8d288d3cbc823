// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "topicfb/evaluation.hpp"

namespace topicfb {

enum class SusceptibilityClass { Positive, Negative, Insignificant };

std::string_view to_string(SusceptibilityClass cls);
SusceptibilityClass parse_susceptibility_class(std::string_view name);

/// Positive iff the interval lies above zero, negative iff below.
SusceptibilityClass classify_interval(const Interval& ci);

struct UserSusceptibility {
  std::string user_id;
  double alpha_point = 0.0;  // full-training-set fit
  double alpha_mean = 0.0;   // mean over replicates
  Interval alpha_ci;
  SusceptibilityClass cls = SusceptibilityClass::Insignificant;
  double delta_p = 0.0;
  int post_count = 0;
  int quartile = 0;  // 0..3 for G1..G4
};

struct SusceptibilityReport {
  double level = 0.99;
  double q_hi = 0.99;  // user-percentile of the high intervention
  double q_lo = 0.5;
  std::vector<UserSusceptibility> users;
};

/// Per-user percentile intervals of alpha over the replicates and the
/// resulting classes.
std::vector<UserSusceptibility> classify(const BootstrapEnsemble& ensemble,
                                         double level = 0.99);

/// Mean over the user's rows of P[Y=1 | f = f_hi] - P[Y=1 | f = f_lo], with
/// f set exogenously and every other input left as observed.
double probability_gain(const ModelParamsd& params, const FeatureConfig& config,
                        const Design& design, int user, double f_hi = 0.99,
                        double f_lo = 0.5);

/// probability_gain() for every user in one pass (0 for users without rows).
Eigen::VectorXd probability_gains(const ModelParamsd& params, const FeatureConfig& config,
                                  const Design& design, double f_hi = 0.99,
                                  double f_lo = 0.5);

/// Per-user feature values of the high and low intervention.
struct InterventionLevels {
  Eigen::VectorXd hi;
  Eigen::VectorXd lo;
};

/// Feature values at the user-percentiles q_hi and q_lo. For percentile
/// feedback functions these are q_hi and q_lo themselves; otherwise they are
/// the quantiles of the user's training feature values (the levels
/// themselves for users without training rows).
InterventionLevels intervention_levels(const FeatureConfig& config, const Design& train,
                                       double q_hi = 0.99, double q_lo = 0.5);

Eigen::VectorXd probability_gains(const ModelParamsd& params, const FeatureConfig& config,
                                  const Design& design, const InterventionLevels& levels);

/// Cohen's d between the per-row intervention probabilities at the high and
/// low levels. With `users` non-empty only rows of those users are used.
double feedback_effect_size(const ModelParamsd& params, const FeatureConfig& config,
                            const Design& design, const InterventionLevels& levels,
                            const std::vector<int>& users = {});
double feedback_effect_size(const ModelParamsd& params, const FeatureConfig& config,
                            const Design& design, double f_hi, double f_lo,
                            const std::vector<int>& users = {});

/// Classification, probability gains from the point fit, and activity
/// quartiles. Gains average over every sample of the user (data.all), at
/// levels from the training rows (data.train).
SusceptibilityReport susceptibility_report(const BootstrapEnsemble& ensemble,
                                           const Dataset& ds, const PreparedData& data,
                                           double level = 0.99, double q_hi = 0.99,
                                           double q_lo = 0.5);

/// Held-out accuracy restricted to the test samples of `users`, for the
/// model with the feedback feature and for the same model without it. Both
/// are point fits on the training samples and are scored on the same
/// samples.
struct SanityCheck {
  std::size_t users = 0;
  std::size_t test_samples = 0;
  double accuracy_with = 0.0;
  double accuracy_without = 0.0;
};

SanityCheck sanity_check(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config,
                         const Hyperparams& hyper, const std::vector<int>& users);

struct QuartileRow {
  int min_posts = 0;
  int max_posts = 0;
  int users = 0;
  int positive = 0;
  int negative = 0;
  int insignificant = 0;
};

/// Activity quartile (0..3) of every user: users ordered by post count,
/// ties in ingestion order, cut into four groups whose sizes differ by at
/// most one.
std::vector<int> activity_quartiles(const std::vector<int>& post_counts);

std::array<QuartileRow, 4> quartile_report(const SusceptibilityReport& report);

struct TrendDay {
  double mean = 0.0;
  Interval ci;
  bool above_zero = false;   // interval lies above zero
  bool significant = false;  // part of a long enough run
};

struct TopicTrend {
  std::vector<TrendDay> days;
  std::vector<std::pair<int, int>> runs;  // [first, last] day of each run
};

/// Days whose trend interval lies above zero, merged into runs of
/// consecutive days; runs of at least `min_run` days are significant.
std::vector<TopicTrend> trend_significance(const BootstrapEnsemble& ensemble,
                                           double level = 0.95, int min_run = 3);

}  // namespace topicfb
