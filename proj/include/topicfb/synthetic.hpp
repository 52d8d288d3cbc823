// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "topicfb/data_model.hpp"
#include "topicfb/susceptibility.hpp"

namespace topicfb {

/// An unobserved event that lifts the trend of `topic` after `day`.
struct TopicEvent {
  int topic = 0;
  double day = 0.0;  // days since the start of the horizon
};

enum class ShortfallPolicy { Regenerate, Drop };

struct SynthConfig {
  int n_users = 1145;
  double duration_days = 10.0;
  int min_posts = 51;
  int num_topics = 2;
  std::vector<TopicEvent> events{{0, 2.0}, {1, 6.0}};
  double g0 = 5.0;
  double tau_days = 4.0;
  double c = 1.0;  // feedback = c * trend + N(0, 1)
  double susceptible_fraction = 0.5;
  double susceptible_alpha = 1.0;
  // Homogeneous Poisson posting; the expected post count of each user is
  // drawn log-uniformly from this range.
  double min_expected_posts = 50.0;
  double max_expected_posts = 300.0;
  ShortfallPolicy shortfall = ShortfallPolicy::Regenerate;
  int max_attempts = 1000;
  Timestamp start = 1451606400;  // 2016-01-01T00:00:00Z
  std::uint64_t seed = 1;

  void validate() const;
};

/// Named configurations: "paper-c1" (confounded), "paper-c0" (not
/// confounded) and "null" (nobody susceptible, not confounded).
SynthConfig synth_preset(std::string_view name);

/// g_k(t): g0 exp(-(t - t_e) / tau) after each event e of topic k, 0 up to
/// and including the event time.
double event_trend(int topic, double t_days, const SynthConfig& config);

struct GroundTruth {
  std::vector<std::string> user_ids;
  Eigen::VectorXd alpha;          // per user
  Eigen::MatrixXd trend;          // K x M, g_k at the center of each day bin
  std::vector<double> feedback_signal;  // per sample, c * g before noise
};

struct SyntheticData {
  std::vector<PostEvent> posts;  // feedback_count carries the feature f
  Dataset dataset;
  GroundTruth truth;
};

/// Deterministic given config.seed; user u draws from stream (seed, "user", u).
SyntheticData generate(const SynthConfig& config);

/// alpha > 0 maps to positive, alpha < 0 to negative, 0 to insignificant.
SusceptibilityClass true_class(double alpha);

/// Fraction of users whose estimated class equals the true class.
double detection_accuracy(const std::vector<SusceptibilityClass>& estimated,
                          const Eigen::VectorXd& true_alpha);

}  // namespace topicfb
