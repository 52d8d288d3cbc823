// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "topicfb/data_model.hpp"
#include "topicfb/model.hpp"
#include "topicfb/optimizer.hpp"
#include "topicfb/stats.hpp"

namespace topicfb {

/// Per-user holdout: each user's last h samples are test samples. Users with
/// h or fewer samples are train-only.
struct SplitPlan {
  int holdout = 3;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<char> train_mask;  // per dataset sample
};

SplitPlan split(const Dataset& ds, int holdout = 3);

/// Positive class = topic continuation.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

/// Accuracy, F1 and Matthews correlation. MCC is 0 when its denominator
/// vanishes; F1 is 0 when there are no positives at all.
Metrics metrics(const ConfusionCounts& counts);

/// Predicts continuation when p > 0.5, switching when p < 0.5; p == 0.5
/// exactly (only the featureless model) yields `tie_label`.
int predicted_label(double p, int tie_label);

ConfusionCounts confusion(const Eigen::VectorXd& probabilities, const Design& design,
                          int tie_label);

/// Everything a fit needs that is derived from the training portion only:
/// the topic-preference table, frozen feedback CDFs and the designs.
struct PreparedData {
  FeatureConfig config;
  TopicPreferenceTable pref;
  FeedbackFeatures feedback;
  Design train;
  Design test;
  Design all;  // every sample, f = 0 where feedback is missing
  int tie_label = 1;  // majority label of the training samples
};

PreparedData prepare(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config);

struct BootstrapOptions {
  int replicates = 200;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  // Start replicate fits at the full-training-set optimum. The objective is
  // concave, so this changes the iteration count only.
  bool warm_start = true;
};

struct ReplicateFit {
  int iterations = 0;
  bool converged = false;
  bool monotone = false;
  double objective = 0.0;
};

struct BootstrapEnsemble {
  FeatureConfig config;
  Hyperparams hyper;
  int holdout = 3;
  std::uint64_t seed = 0;
  FitResult point;  // fit on the full training set
  Metrics point_metrics;
  std::vector<ModelParamsd> replicates;
  std::vector<Metrics> test_metrics;
  std::vector<std::uint64_t> seeds;
  std::vector<ReplicateFit> fits;

  std::size_t size() const { return replicates.size(); }
  std::vector<double> alpha_samples(int user) const;
  std::vector<double> trend_samples(int topic, int day) const;
  std::vector<double> accuracy_samples() const;
  std::vector<double> f1_samples() const;
  std::vector<double> mcc_samples() const;
};

/// Per-user resampling with replacement of the training rows, preserving
/// every user's training row count. Returns row multiplicities.
Eigen::VectorXd bootstrap_weights(const Design& train, std::uint64_t replicate_seed);

/// B fits on per-user bootstrap resamples of the training samples, each
/// scored on the held-out samples. Replicate r draws from the stream
/// (seed, "bootstrap", r), so results do not depend on the thread count.
BootstrapEnsemble bootstrap_fit(const Dataset& ds, const SplitPlan& plan,
                                const FeatureConfig& config, const Hyperparams& hyper,
                                const BootstrapOptions& options);

struct MetricSummary {
  double mean = 0.0;
  Interval ci;         // percentile interval
  double se = 0.0;     // standard error of the mean
  Interval normal_ci;  // mean +/- z * se
  std::vector<double> replicates;
};

MetricSummary summarize(std::vector<double> values, double level = 0.99);

struct AblationRow {
  FeatureConfig config;
  MetricSummary accuracy;
  MetricSummary f1;
  MetricSummary mcc;
};

/// The standard feature ladder: none, prop, pref, prop+pref,
/// prop+pref+trend.
std::vector<FeatureConfig> standard_ablation_configs();

std::vector<AblationRow> ablation(const Dataset& ds, const SplitPlan& plan,
                                  const std::vector<FeatureConfig>& configs,
                                  const Hyperparams& hyper, const BootstrapOptions& options,
                                  double level = 0.99);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

/// Welch two-sample t-test. If both samples have zero variance, p is 1 for
/// equal means and 0 otherwise.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// (mean_a - mean_b) / pooled standard deviation.
double cohens_d(std::span<const double> a, std::span<const double> b);

inline const std::vector<double>& default_beta_u_grid() {
  static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0};
  return grid;
}
inline const std::vector<double>& default_beta_g_grid() {
  static const std::vector<double> grid{0.1, 1.0, 10.0, 100.0};
  return grid;
}

struct GridPoint {
  double beta_u = 0.0;
  double beta_g = 0.0;
  double accuracy = 0.0;
};

/// Hyperparameters with the best holdout accuracy; ties keep the earliest
/// grid point. `trials` receives every evaluated point when non-null.
Hyperparams grid_search(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config,
                        std::span<const double> beta_u_grid,
                        std::span<const double> beta_g_grid, const Hyperparams& base = {},
                        std::vector<GridPoint>* trials = nullptr);

}  // namespace topicfb
