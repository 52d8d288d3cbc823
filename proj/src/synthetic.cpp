// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "topicfb/error.hpp"
#include "topicfb/model.hpp"
#include "topicfb/rng.hpp"

namespace topicfb {

void SynthConfig::validate() const {
  if (n_users < 1) throw UsageError("synthetic: n_users must be >= 1");
  if (!(duration_days > 0.0)) throw UsageError("synthetic: duration must be positive");
  if (min_posts < 2) throw UsageError("synthetic: min_posts must be >= 2");
  if (num_topics < 2) throw UsageError("synthetic: need at least 2 topics");
  if (!(tau_days > 0.0)) throw UsageError("synthetic: tau must be positive");
  if (!(susceptible_fraction >= 0.0 && susceptible_fraction <= 1.0)) {
    throw UsageError("synthetic: susceptible fraction must lie in [0, 1]");
  }
  if (!(min_expected_posts > 0.0 && max_expected_posts >= min_expected_posts)) {
    throw UsageError("synthetic: invalid expected post range");
  }
  for (const auto& e : events) {
    if (e.topic < 0 || e.topic >= num_topics) {
      throw UsageError("synthetic: event topic out of range");
    }
    if (e.day < 0.0 || e.day > duration_days) {
      throw UsageError("synthetic: event time outside the horizon");
    }
  }
}

SynthConfig synth_preset(std::string_view name) {
  SynthConfig config;
  if (name == "paper-c1") return config;
  if (name == "paper-c0") {
    config.c = 0.0;
    return config;
  }
  if (name == "null") {
    config.c = 0.0;
    config.susceptible_fraction = 0.0;
    return config;
  }
  throw UsageError("unknown synthetic preset '" + std::string(name) +
                   "' (expected paper-c1, paper-c0 or null)");
}

double event_trend(int topic, double t_days, const SynthConfig& config) {
  double g = 0.0;
  for (const auto& e : config.events) {
    if (e.topic == topic && t_days > e.day) {
      g += config.g0 * std::exp(-(t_days - e.day) / config.tau_days);
    }
  }
  return g;
}

SusceptibilityClass true_class(double alpha) {
  if (alpha > 0.0) return SusceptibilityClass::Positive;
  if (alpha < 0.0) return SusceptibilityClass::Negative;
  return SusceptibilityClass::Insignificant;
}

double detection_accuracy(const std::vector<SusceptibilityClass>& estimated,
                          const Eigen::VectorXd& true_alpha) {
  if (static_cast<Eigen::Index>(estimated.size()) != true_alpha.size() || estimated.empty()) {
    throw DataError("detection accuracy: estimated and true user sets are not aligned");
  }
  std::size_t hits = 0;
  for (std::size_t u = 0; u < estimated.size(); ++u) {
    if (estimated[u] == true_class(true_alpha(static_cast<Eigen::Index>(u)))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(estimated.size());
}

namespace {

struct UserDraw {
  std::vector<PostEvent> posts;
  std::vector<double> signal;
};

std::string user_name(int u) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%05d", u);
  return buf;
}

// Returns an empty draw when the user falls short and the policy drops it.
UserDraw draw_user(const SynthConfig& config, int u, double alpha) {
  auto rng = make_stream(config.seed, "user", static_cast<std::uint64_t>(u));
  std::uniform_real_distribution<double> log_rate(std::log(config.min_expected_posts),
                                                  std::log(config.max_expected_posts));
  const auto horizon = static_cast<std::int64_t>(config.duration_days * kSecondsPerDay);
  std::uniform_int_distribution<std::int64_t> offset(0, horizon - 1);
  std::uniform_int_distribution<int> first_topic(0, config.num_topics - 1);
  std::uniform_int_distribution<int> other_topic(0, config.num_topics - 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<std::int64_t> times;
  for (int attempt = 0;; ++attempt) {
    std::poisson_distribution<int> count(std::exp(log_rate(rng)));
    const int n = count(rng);
    if (n >= config.min_posts) {
      times.resize(n);
      for (auto& t : times) t = offset(rng);
      std::sort(times.begin(), times.end());
      break;
    }
    if (config.shortfall == ShortfallPolicy::Drop) return {};
    if (attempt + 1 >= config.max_attempts) {
      throw UsageError("synthetic: could not reach min_posts for user " + user_name(u));
    }
  }

  UserDraw draw;
  const std::string id = user_name(u);
  int topic = first_topic(rng);
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (j > 0) {
      // Continue or switch the previous post's topic.
      const double t = static_cast<double>(times[j]) / kSecondsPerDay;
      const double g = event_trend(topic, t, config);
      const double f = config.c * g + noise(rng);
      const double p = logistic(g + alpha * f);
      draw.posts.back().feedback_count = f;
      draw.signal.push_back(config.c * g);
      if (unit(rng) >= p) {
        const int other = other_topic(rng);
        topic = other >= topic ? other + 1 : other;
      }
    }
    PostEvent post;
    post.post_id = id + "p" + std::to_string(j);
    post.user_id = id;
    post.timestamp = config.start + times[j];
    post.topic_id = topic;
    draw.posts.push_back(std::move(post));
  }
  return draw;
}

}  // namespace

SyntheticData generate(const SynthConfig& config) {
  config.validate();

  // Susceptible users: a seeded random subset of the requested size.
  std::vector<int> order(config.n_users);
  std::iota(order.begin(), order.end(), 0);
  auto assign = make_stream(config.seed, "susceptible", 0);
  std::shuffle(order.begin(), order.end(), assign);
  const auto n_susceptible = static_cast<std::size_t>(
      std::floor(config.susceptible_fraction * config.n_users));
  std::vector<double> alpha(config.n_users, 0.0);
  for (std::size_t i = 0; i < n_susceptible; ++i) alpha[order[i]] = config.susceptible_alpha;

  SyntheticData out;
  std::vector<double> kept_alpha;
  for (int u = 0; u < config.n_users; ++u) {
    auto draw = draw_user(config, u, alpha[u]);
    if (draw.posts.empty()) continue;
    out.truth.user_ids.push_back(draw.posts.front().user_id);
    kept_alpha.push_back(alpha[u]);
    out.truth.feedback_signal.insert(out.truth.feedback_signal.end(), draw.signal.begin(),
                                     draw.signal.end());
    std::move(draw.posts.begin(), draw.posts.end(), std::back_inserter(out.posts));
  }
  if (out.posts.empty()) throw UsageError("synthetic: every user was dropped");
  out.truth.alpha = Eigen::Map<const Eigen::VectorXd>(kept_alpha.data(),
                                                      static_cast<Eigen::Index>(kept_alpha.size()));

  BuildOptions build;
  build.day_origin = config.start;
  build.num_topics = config.num_topics;
  out.dataset = build_samples(out.posts, nullptr, build);

  const int m = out.dataset.num_days;
  out.truth.trend.resize(config.num_topics, m);
  for (int k = 0; k < config.num_topics; ++k) {
    for (int j = 0; j < m; ++j) out.truth.trend(k, j) = event_trend(k, j + 0.5, config);
  }
  return out;
}

}  // namespace topicfb
