// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/susceptibility.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "topicfb/error.hpp"

namespace topicfb {

std::string_view to_string(SusceptibilityClass cls) {
  switch (cls) {
    case SusceptibilityClass::Positive: return "positive";
    case SusceptibilityClass::Negative: return "negative";
    case SusceptibilityClass::Insignificant: return "insignificant";
  }
  return "insignificant";
}

SusceptibilityClass parse_susceptibility_class(std::string_view name) {
  if (name == "positive") return SusceptibilityClass::Positive;
  if (name == "negative") return SusceptibilityClass::Negative;
  if (name == "insignificant") return SusceptibilityClass::Insignificant;
  throw DataError("unknown susceptibility class '" + std::string(name) + "'");
}

SusceptibilityClass classify_interval(const Interval& ci) {
  if (ci.lo > 0.0) return SusceptibilityClass::Positive;
  if (ci.hi < 0.0) return SusceptibilityClass::Negative;
  return SusceptibilityClass::Insignificant;
}

std::vector<UserSusceptibility> classify(const BootstrapEnsemble& ensemble, double level) {
  if (!ensemble.config.use_feedback) {
    throw UsageError("susceptibility needs an ensemble fitted with the feedback feature");
  }
  if (ensemble.size() < 2) throw UsageError("susceptibility needs at least 2 replicates");
  const int n = ensemble.point.params.num_users();
  std::vector<UserSusceptibility> users(n);
  for (int u = 0; u < n; ++u) {
    const auto samples = ensemble.alpha_samples(u);
    auto& s = users[u];
    s.alpha_point = ensemble.point.params.alpha(u);
    s.alpha_mean = mean(samples);
    s.alpha_ci = percentile_interval(samples, level);
    s.cls = classify_interval(s.alpha_ci);
  }
  return users;
}

namespace {

struct Intervention {
  double hi = 0.0;
  double lo = 0.0;
};

Intervention intervene(const ModelParamsd& params, const FeatureConfig& config,
                       const Design& design, Eigen::Index r, double f_hi, double f_lo) {
  const double base = linear_predictor(params, config, design.user[r], design.topic[r],
                                       design.day[r], design.pref(r), 0.0);
  const double a = config.use_feedback ? params.alpha(design.user[r]) : 0.0;
  return {logistic(base + a * f_hi), logistic(base + a * f_lo)};
}

InterventionLevels constant_levels(int num_users, double f_hi, double f_lo) {
  return {Eigen::VectorXd::Constant(num_users, f_hi), Eigen::VectorXd::Constant(num_users, f_lo)};
}

}  // namespace

InterventionLevels intervention_levels(const FeatureConfig& config, const Design& train,
                                       double q_hi, double q_lo) {
  auto levels = constant_levels(train.num_users, q_hi, q_lo);
  if (is_percentile(config.feedback_fn)) return levels;
  std::vector<std::vector<double>> values(train.num_users);
  for (Eigen::Index r = 0; r < train.rows(); ++r) {
    values[train.user[r]].push_back(train.feedback(r));
  }
  for (int u = 0; u < train.num_users; ++u) {
    if (values[u].empty()) continue;
    levels.hi(u) = quantile(values[u], q_hi);
    levels.lo(u) = quantile(values[u], q_lo);
  }
  return levels;
}

Eigen::VectorXd probability_gains(const ModelParamsd& params, const FeatureConfig& config,
                                  const Design& design, const InterventionLevels& levels) {
  check_dims(params, design);
  if (levels.hi.size() != design.num_users || levels.lo.size() != design.num_users) {
    throw DataError("intervention levels do not cover every user");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(design.num_users);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(design.num_users);
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const int u = design.user[r];
    const auto p = intervene(params, config, design, r, levels.hi(u), levels.lo(u));
    sum(u) += p.hi - p.lo;
    count(u) += 1.0;
  }
  return (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
}

Eigen::VectorXd probability_gains(const ModelParamsd& params, const FeatureConfig& config,
                                  const Design& design, double f_hi, double f_lo) {
  return probability_gains(params, config, design,
                           constant_levels(design.num_users, f_hi, f_lo));
}

double probability_gain(const ModelParamsd& params, const FeatureConfig& config,
                        const Design& design, int user, double f_hi, double f_lo) {
  check_dims(params, design);
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    if (design.user[r] != user) continue;
    const auto p = intervene(params, config, design, r, f_hi, f_lo);
    sum += p.hi - p.lo;
    ++count;
  }
  if (count == 0) throw DataError("probability_gain: user has no samples");
  return sum / count;
}

double feedback_effect_size(const ModelParamsd& params, const FeatureConfig& config,
                            const Design& design, const InterventionLevels& levels,
                            const std::vector<int>& users) {
  check_dims(params, design);
  std::vector<char> keep(design.num_users, users.empty() ? 1 : 0);
  for (int u : users) keep.at(u) = 1;
  std::vector<double> hi, lo;
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const int u = design.user[r];
    if (!keep[u]) continue;
    const auto p = intervene(params, config, design, r, levels.hi(u), levels.lo(u));
    hi.push_back(p.hi);
    lo.push_back(p.lo);
  }
  return cohens_d(hi, lo);
}

double feedback_effect_size(const ModelParamsd& params, const FeatureConfig& config,
                            const Design& design, double f_hi, double f_lo,
                            const std::vector<int>& users) {
  return feedback_effect_size(params, config, design,
                              constant_levels(design.num_users, f_hi, f_lo), users);
}

std::vector<int> activity_quartiles(const std::vector<int>& post_counts) {
  const auto n = post_counts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return post_counts[a] < post_counts[b];
  });
  std::vector<int> quartile(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    quartile[order[rank]] = static_cast<int>(rank * 4 / n);
  }
  return quartile;
}

SusceptibilityReport susceptibility_report(const BootstrapEnsemble& ensemble,
                                           const Dataset& ds, const PreparedData& data,
                                           double level, double q_hi, double q_lo) {
  SusceptibilityReport report;
  report.level = level;
  report.q_hi = q_hi;
  report.q_lo = q_lo;
  report.users = classify(ensemble, level);
  if (static_cast<int>(report.users.size()) != ds.num_users) {
    throw DataError("ensemble and dataset disagree on the number of users");
  }
  const auto levels = intervention_levels(ensemble.config, data.train, q_hi, q_lo);
  const auto gains =
      probability_gains(ensemble.point.params, ensemble.config, data.all, levels);
  const auto quartiles = activity_quartiles(ds.user_post_counts);
  for (int u = 0; u < ds.num_users; ++u) {
    auto& s = report.users[u];
    s.user_id = ds.user_ids[u];
    s.delta_p = gains(u);
    s.post_count = ds.user_post_counts[u];
    s.quartile = quartiles[u];
  }
  return report;
}

SanityCheck sanity_check(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config,
                         const Hyperparams& hyper, const std::vector<int>& users) {
  if (!config.use_feedback) throw UsageError("sanity check needs the feedback feature");
  std::vector<char> keep(ds.num_users, 0);
  for (int u : users) keep.at(u) = 1;
  FeatureConfig without = config;
  without.use_feedback = false;
  const auto with_data = prepare(ds, plan, config);
  const auto without_data = prepare(ds, plan, without);
  // Score both models on the selected users' test samples that have
  // feedback, so the two accuracies share a denominator.
  std::vector<char> scored(ds.size(), 0);
  for (Eigen::Index r = 0; r < with_data.test.rows(); ++r) {
    if (keep[with_data.test.user[r]]) scored[with_data.test.sample_index[r]] = 1;
  }
  auto accuracy = [&](const PreparedData& data, const FeatureConfig& fc, std::size_t& n) {
    const auto res = fit(data.train, fc, hyper);
    const auto p = predict(res.params, fc, data.test);
    std::size_t hits = 0;
    n = 0;
    for (Eigen::Index r = 0; r < data.test.rows(); ++r) {
      if (!scored[data.test.sample_index[r]]) continue;
      ++n;
      if (predicted_label(p(r), data.tie_label) == data.test.label(r)) ++hits;
    }
    return n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  };
  SanityCheck out;
  out.accuracy_with = accuracy(with_data, config, out.test_samples);
  std::size_t n_without = 0;
  out.accuracy_without = accuracy(without_data, without, n_without);
  std::vector<char> seen(ds.num_users, 0);
  for (Eigen::Index r = 0; r < with_data.test.rows(); ++r) {
    const int u = with_data.test.user[r];
    if (keep[u] && !seen[u]) {
      seen[u] = 1;
      ++out.users;
    }
  }
  return out;
}

std::array<QuartileRow, 4> quartile_report(const SusceptibilityReport& report) {
  if (report.users.size() < 4) throw DataError("quartile report needs at least 4 users");
  std::array<QuartileRow, 4> rows{};
  for (auto& r : rows) {
    r.min_posts = std::numeric_limits<int>::max();
    r.max_posts = 0;
  }
  for (const auto& u : report.users) {
    auto& r = rows.at(u.quartile);
    ++r.users;
    r.min_posts = std::min(r.min_posts, u.post_count);
    r.max_posts = std::max(r.max_posts, u.post_count);
    switch (u.cls) {
      case SusceptibilityClass::Positive: ++r.positive; break;
      case SusceptibilityClass::Negative: ++r.negative; break;
      case SusceptibilityClass::Insignificant: ++r.insignificant; break;
    }
  }
  return rows;
}

std::vector<TopicTrend> trend_significance(const BootstrapEnsemble& ensemble, double level,
                                           int min_run) {
  if (!ensemble.config.use_trend) {
    throw UsageError("trend significance needs an ensemble fitted with the trend feature");
  }
  if (ensemble.size() < 2) throw UsageError("trend significance needs at least 2 replicates");
  const int k_count = ensemble.point.params.num_topics();
  const int m_count = ensemble.point.params.num_days();
  std::vector<TopicTrend> out(k_count);
  for (int k = 0; k < k_count; ++k) {
    auto& topic = out[k];
    topic.days.resize(m_count);
    for (int j = 0; j < m_count; ++j) {
      const auto samples = ensemble.trend_samples(k, j);
      auto& day = topic.days[j];
      day.mean = mean(samples);
      day.ci = percentile_interval(samples, level);
      day.above_zero = day.ci.lo > 0.0;
    }
    int j = 0;
    while (j < m_count) {
      if (!topic.days[j].above_zero) {
        ++j;
        continue;
      }
      int end = j;
      while (end + 1 < m_count && topic.days[end + 1].above_zero) ++end;
      if (end - j + 1 >= min_run) {
        topic.runs.emplace_back(j, end);
        for (int d = j; d <= end; ++d) topic.days[d].significant = true;
      }
      j = end + 1;
    }
  }
  return out;
}

}  // namespace topicfb
