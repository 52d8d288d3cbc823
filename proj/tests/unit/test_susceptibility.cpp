// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>

#include "doctest.h"
#include "support/helpers.hpp"
#include "topicfb/error.hpp"
#include "topicfb/susceptibility.hpp"
#include "topicfb/synthetic.hpp"

using namespace topicfb;

namespace {

BootstrapEnsemble trend_ensemble(const std::vector<std::vector<double>>& days, int b) {
  BootstrapEnsemble ens;
  ens.config = parse_features("trend");
  const int m = static_cast<int>(days[0].size());
  ens.point.params = ModelParamsd::Zero(1, static_cast<int>(days.size()), m);
  for (int r = 0; r < b; ++r) {
    auto p = ModelParamsd::Zero(1, static_cast<int>(days.size()), m);
    for (std::size_t k = 0; k < days.size(); ++k) {
      for (int j = 0; j < m; ++j) p.g(static_cast<Eigen::Index>(k), j) = days[k][j] + 0.01 * (r - b / 2);
    }
    ens.replicates.push_back(p);
  }
  return ens;
}

}  // namespace

TEST_CASE("interval classes") {
  CHECK(classify_interval({0.2, 0.8}) == SusceptibilityClass::Positive);
  CHECK(classify_interval({-0.3, -0.1}) == SusceptibilityClass::Negative);
  CHECK(classify_interval({-0.1, 0.5}) == SusceptibilityClass::Insignificant);
  CHECK(classify_interval({0.0, 0.5}) == SusceptibilityClass::Insignificant);
  for (auto c : {SusceptibilityClass::Positive, SusceptibilityClass::Negative,
                 SusceptibilityClass::Insignificant}) {
    CHECK(parse_susceptibility_class(to_string(c)) == c);
  }
}

TEST_CASE("classification from replicates") {
  BootstrapEnsemble ens;
  ens.config = FeatureConfig::Full();
  ens.point.params = ModelParamsd::Zero(3, 1, 1);
  for (int r = 0; r < 50; ++r) {
    auto p = ModelParamsd::Zero(3, 1, 1);
    p.alpha << 1.0 + 0.01 * r, -1.0 - 0.01 * r, -0.25 + 0.01 * r;
    ens.replicates.push_back(p);
  }
  const auto users = classify(ens, 0.99);
  CHECK(users[0].cls == SusceptibilityClass::Positive);
  CHECK(users[1].cls == SusceptibilityClass::Negative);
  CHECK(users[2].cls == SusceptibilityClass::Insignificant);
  CHECK(users[0].alpha_mean == doctest::Approx(1.245));
  ens.config.use_feedback = false;
  CHECK_THROWS_AS(classify(ens), UsageError);
}

TEST_CASE("probability gain") {
  auto d = testing::random_design(1, 1, 1, 1, 2);
  auto p = ModelParamsd::Zero(1, 1, 1);
  p.a(0) = -0.5;
  p.alpha(0) = 1.0;
  const auto cfg = parse_features("prop,feedback");
  const double expected = 1.0 / (1.0 + std::exp(-0.49)) - 0.5;
  CHECK(probability_gain(p, cfg, d, 0) == doctest::Approx(expected));
  CHECK(probability_gain(p, cfg, d, 0) == doctest::Approx(0.1201).epsilon(1e-3));

  const auto many = testing::random_design(3, 2, 2, 60, 4);
  auto q = testing::random_params(3, 2, 2, 5);
  q.alpha.setZero();
  const auto gains = probability_gains(q, FeatureConfig::Full(), many);
  CHECK(gains.isZero());
  CHECK(feedback_effect_size(q, FeatureConfig::Full(), many, 0.99, 0.5) == 0.0);

  q.alpha << 1.0, 2.0, -1.0;
  const auto g2 = probability_gains(q, FeatureConfig::Full(), many);
  for (int u = 0; u < 3; ++u) {
    CHECK(g2(u) == doctest::Approx(probability_gain(q, FeatureConfig::Full(), many, u)));
  }
  CHECK(g2(0) > 0.0);
  CHECK(g2(2) < 0.0);
  CHECK(feedback_effect_size(q, FeatureConfig::Full(), many, 0.99, 0.5, {0, 1}) > 0.0);
  CHECK(feedback_effect_size(q, FeatureConfig::Full(), many, 0.99, 0.5, {2}) < 0.0);
}

TEST_CASE("intervention levels for raw feedback are user quantiles") {
  auto d = testing::random_design(2, 1, 1, 4, 6);
  d.user = {0, 0, 0, 1};
  d.feedback << 1.0, 2.0, 3.0, 7.0;
  const auto raw = intervention_levels(FeatureConfig::Full(FeedbackFunctionKind::RawCount), d,
                                       0.5, 0.0);
  CHECK(raw.hi(0) == 2.0);
  CHECK(raw.lo(0) == 1.0);
  CHECK(raw.hi(1) == 7.0);
  const auto pct = intervention_levels(FeatureConfig::Full(), d, 0.99, 0.5);
  CHECK(pct.hi(0) == 0.99);
  CHECK(pct.lo(1) == 0.5);
}

TEST_CASE("activity quartiles") {
  CHECK(activity_quartiles({40, 10, 30, 20}) == std::vector<int>{3, 0, 2, 1});
  CHECK(activity_quartiles({5, 5, 5, 5, 5, 5, 5, 5}) ==
        std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});
  const auto q = activity_quartiles({1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::array<int, 4> sizes{};
  for (int g : q) ++sizes[g];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <=
        1);
}

TEST_CASE("trend significance runs") {
  const auto zero = trend_significance(trend_ensemble({{0, 0, 0, 0, 0}}, 20));
  CHECK(zero[0].runs.empty());
  const auto gap = trend_significance(trend_ensemble({{1, 1, -1, 1, 1}}, 20));
  CHECK(gap[0].runs.empty());
  CHECK(gap[0].days[0].above_zero);
  CHECK_FALSE(gap[0].days[0].significant);
  const auto run = trend_significance(trend_ensemble({{-1, 1, 1, 1, -1}, {1, 1, 1, 1, 1}}, 20));
  REQUIRE(run[0].runs.size() == 1);
  CHECK(run[0].runs[0] == std::pair<int, int>{1, 3});
  CHECK(run[1].runs[0] == std::pair<int, int>{0, 4});
  CHECK(trend_significance(trend_ensemble({{1, 1, -1, 1, 1}}, 20), 0.95, 2)[0].runs.size() == 2);
}

TEST_CASE("synthetic recovery") {
  auto config = testing::small_synth("paper-c1", 80, 12);
  config.max_expected_posts = 200.0;
  const auto data = generate(config);
  const auto plan = split(data.dataset, 3);
  BootstrapOptions opt;
  opt.replicates = 20;
  opt.seed = 3;
  const auto cfg = FeatureConfig::Full(FeedbackFunctionKind::RawCount);
  const auto ens = bootstrap_fit(data.dataset, plan, cfg, {}, opt);

  SUBCASE("trend run starts near the event") {
    const auto trends = trend_significance(ens, 0.95, 3);
    const auto& first = config.events.front();
    REQUIRE_FALSE(trends[first.topic].runs.empty());
    CHECK(std::abs(trends[first.topic].runs.front().first - first.day) <= 1.0);
  }
  SUBCASE("susceptible users have a positive effect size") {
    const auto prep = prepare(data.dataset, plan, cfg);
    std::vector<int> susceptible;
    for (int u = 0; u < data.dataset.num_users; ++u) {
      if (data.truth.alpha(u) > 0) susceptible.push_back(u);
    }
    const auto levels = intervention_levels(cfg, prep.train);
    CHECK(feedback_effect_size(ens.point.params, cfg, prep.all, levels, susceptible) > 0.0);
    const auto report = susceptibility_report(ens, data.dataset, prep);
    CHECK(report.users.size() == 80);
    CHECK(report.users[0].user_id == data.dataset.user_ids[0]);
    const auto rows = quartile_report(report);
    int total = 0;
    for (const auto& r : rows) total += r.users;
    CHECK(total == 80);
  }
  SUBCASE("sanity check scores both models on the same samples") {
    std::vector<int> users{0, 1, 2, 3, 4, 5};
    const auto check = sanity_check(data.dataset, plan, cfg, {}, users);
    CHECK(check.users == 6);
    CHECK(check.test_samples == 18);
    CHECK(check.accuracy_with >= 0.0);
    CHECK(check.accuracy_with <= 1.0);
  }
}

TEST_CASE("no susceptibility is detected on the null preset") {
  auto config = testing::small_synth("null", 60, 13);
  const auto data = generate(config);
  BootstrapOptions opt;
  opt.replicates = 30;
  opt.seed = 9;
  const auto ens = bootstrap_fit(data.dataset, split(data.dataset, 3),
                                 FeatureConfig::Full(FeedbackFunctionKind::RawCount), {}, opt);
  int flagged = 0;
  for (const auto& u : classify(ens, 0.99)) {
    if (u.cls != SusceptibilityClass::Insignificant) ++flagged;
  }
  CHECK(flagged <= 6);
}
