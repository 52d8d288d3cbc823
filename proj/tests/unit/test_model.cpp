// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>
#include <limits>

#include "doctest.h"
#include "support/helpers.hpp"
#include "topicfb/error.hpp"
#include "topicfb/evaluation.hpp"
#include "topicfb/model.hpp"

using namespace topicfb;

TEST_CASE("logistic and logit") {
  CHECK(logistic(0.0) == 0.5);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(logistic(inf) == 1.0);
  CHECK(logistic(-inf) == 0.0);
  CHECK(logistic(1000.0) == 1.0);
  CHECK(logistic(-1000.0) == 0.0);
  // log(0.1 / 0.9)
  const double x = std::log(0.1) - std::log(0.9);
  CHECK(logit(0.1) == doctest::Approx(x).epsilon(1e-14));
  CHECK(logit(0.1) == doctest::Approx(-2.19722).epsilon(1e-5));
  CHECK(logistic(-2.19722) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(std::isfinite(logit(0.0)));
  CHECK(std::isfinite(logit(1.0)));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(800.0) == 800.0);
  CHECK(log_prob(0.0, 1) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("Laplace smoothed topic preference") {
  Eigen::MatrixXi counts(3, 2);
  counts << 4, 4, 9, 81, 0, 90;
  const auto t2 = topic_preference(counts, 2);
  CHECK(t2.probability(0, 0) == 0.5);
  CHECK(t2.x(0, 0) == 0.0);

  Eigen::MatrixXi c10 = Eigen::MatrixXi::Zero(2, 10);
  c10(0, 0) = 9;
  c10(0, 1) = 81;
  c10(1, 1) = 90;
  const auto t10 = topic_preference(c10, 10);
  CHECK(t10.probability(0, 0) == doctest::Approx(0.1));
  CHECK(t10.x(0, 0) == doctest::Approx(std::log(0.1 / 0.9)));
  CHECK(t10.probability(1, 0) == doctest::Approx(0.01));
  CHECK(t10.x(1, 0) == doctest::Approx(std::log(0.01 / 0.99)));
  CHECK(t10.x(1, 0) == doctest::Approx(-4.59512).epsilon(1e-6));
  CHECK(t10.probability.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("linear predictor and feature gating") {
  auto p = ModelParamsd::Zero(1, 1, 1);
  CHECK(logistic(linear_predictor(p, FeatureConfig::Full(), 0, 0, 0, -2.19722, 0.9)) == 0.5);
  p.a(0) = 0.5;
  p.b = 1.0;
  p.g(0, 0) = 0.7;
  p.alpha(0) = 2.0;
  const double eta = linear_predictor(p, FeatureConfig::Full(), 0, 0, 0, -2.19722, 0.9);
  CHECK(eta == doctest::Approx(0.5 - 2.19722 + 0.7 + 1.8));
  CHECK(eta == doctest::Approx(0.80278));
  CHECK(logistic(eta) == doctest::Approx(1.0 / (1.0 + std::exp(-0.80278))));
  CHECK(logistic(eta) == doctest::Approx(0.6905).epsilon(1e-4));

  auto cfg = FeatureConfig::Full();
  cfg.use_feedback = false;
  const double without = linear_predictor(p, cfg, 0, 0, 0, -2.19722, 0.9);
  p.alpha(0) = -17.0;
  CHECK(linear_predictor(p, cfg, 0, 0, 0, -2.19722, 0.9) == without);
}

TEST_CASE("feature lists") {
  CHECK(parse_features("prop,trend").name() == "prop,trend");
  CHECK(parse_features("feedback, pref").name() == "pref,feedback");
  CHECK(parse_features("none").name() == "none");
  CHECK(parse_features("").name() == "none");
  CHECK_FALSE(parse_features("none").any());
  CHECK_THROWS_AS(parse_features("prop,bogus"), UsageError);
  CHECK(FeatureConfig::Full().name() == "prop,pref,trend,feedback");
}

namespace {

Dataset toy_dataset() {
  using testing::post;
  std::vector<PostEvent> posts;
  const std::vector<std::vector<int>> topics{{0, 0, 1, 0, 2, 2, 0}, {1, 1, 1, 0, 1}};
  for (std::size_t u = 0; u < topics.size(); ++u) {
    for (std::size_t j = 0; j < topics[u].size(); ++j) {
      auto p = post("u" + std::to_string(u) + "p" + std::to_string(j), "u" + std::to_string(u),
                    static_cast<Timestamp>(j) * 40000, topics[u][j]);
      p.feedback_count = static_cast<double>(j);
      posts.push_back(p);
    }
  }
  return build_samples(posts, nullptr);
}

}  // namespace

TEST_CASE("preference only with b = 1 is the null model of posting") {
  const auto ds = toy_dataset();
  std::vector<char> mask(ds.size(), 1);
  const auto counts = training_topic_counts(ds, mask);
  const auto pref = topic_preference(counts, ds.num_topics);
  const auto cfg = parse_features("pref");
  const auto fb = compute_feedback_features(ds, cfg.feedback_fn, mask);
  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto design = make_design(ds, cfg, pref, fb, rows);
  auto p = ModelParamsd::Zero(ds.num_users, ds.num_topics, ds.num_days);
  p.b = 1.0;
  const auto prob = predict(p, cfg, design);
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const auto& s = ds.samples[design.sample_index[r]];
    // Previous-post topic tallies over the user's samples, add-one smoothed.
    double n_k = 0, n = 0;
    for (const auto& t : ds.user_samples(s.user_idx)) {
      n += 1;
      if (t.topic_idx == s.topic_idx) n_k += 1;
    }
    CHECK(prob(r) == doctest::Approx((n_k + 1) / (n + ds.num_topics)).epsilon(1e-12));
  }
}

TEST_CASE("batch prediction matches single predictor calls") {
  const auto d = testing::random_design(3, 2, 3, 25, 11);
  const auto p = testing::random_params(3, 2, 3, 12);
  const auto cfg = FeatureConfig::Full();
  const auto prob = predict(p, cfg, d);
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    CHECK(prob(r) == logistic(linear_predictor(p, cfg, d, r)));
  }
  const auto zero = predict(ModelParamsd::Zero(3, 2, 3), cfg, d);
  CHECK((zero.array() == 0.5).all());
  CHECK_THROWS_AS(predict(ModelParamsd::Zero(2, 2, 3), cfg, d), DataError);
}

TEST_CASE("design skips rows without feedback only when feedback is used") {
  auto ds = toy_dataset();
  ds.samples[1].has_feedback = false;
  std::vector<char> mask(ds.size(), 1);
  const auto pref = topic_preference(training_topic_counts(ds, mask), ds.num_topics);
  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto full = FeatureConfig::Full(FeedbackFunctionKind::RawCount);
  const auto fb = compute_feedback_features(ds, full.feedback_fn, mask);
  CHECK(make_design(ds, full, pref, fb, rows).rows() ==
        static_cast<Eigen::Index>(ds.size()) - 1);
  const auto no_fb = parse_features("prop,pref");
  const auto d = make_design(ds, no_fb, pref, fb, rows);
  CHECK(d.rows() == static_cast<Eigen::Index>(ds.size()));
  CHECK(d.feedback(1) == 0.0);
}
