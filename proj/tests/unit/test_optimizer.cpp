// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>

#include "doctest.h"
#include "support/helpers.hpp"
#include "support/oracle.hpp"
#include "topicfb/model.hpp"
#include "topicfb/optimizer.hpp"

using namespace topicfb;

TEST_CASE("tiny instance matches a random-restart oracle") {
  for (std::uint64_t seed : {21, 22}) {
    const auto d = testing::random_design(2, 2, 2, 40, seed);
    Hyperparams hyper;
    hyper.beta_u = 0.1;
    hyper.beta_g = 1.0;
    hyper.tol = 1e-12;
    hyper.max_iters = 20000;
    const auto res = fit(d, FeatureConfig::Full(), hyper);
    const double oracle = testing::oracle_maximum(d, hyper, 5);
    CHECK(std::abs(res.objective() - oracle) < 1e-4);
    CHECK(trace_monotone(res.objective_trace, 1e-12));
  }
}

TEST_CASE("stationary point without penalties") {
  const auto d = testing::random_design(3, 2, 3, 400, 31);
  Hyperparams hyper;
  hyper.beta_u = 0.0;
  hyper.beta_g = 0.0;
  hyper.tol = 1e-14;
  hyper.max_iters = 20000;
  const auto cfg = FeatureConfig::Full();
  const auto res = fit(d, cfg, hyper);
  const auto layout = ParamLayout::of(d);
  const auto grad = layout.pack(smooth_gradient(res.params, d, cfg, hyper));
  CHECK(grad.norm() < 1e-4);
}

TEST_CASE("trace is monotone and the stopping rule holds") {
  const auto d = testing::random_design(5, 3, 4, 300, 41);
  Hyperparams hyper;
  const auto res = fit(d, FeatureConfig::Full(), hyper);
  CHECK(res.converged);
  CHECK(res.iterations + 1 == static_cast<int>(res.objective_trace.size()));
  CHECK(trace_monotone(res.objective_trace, 1e-12));
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] >= res.objective_trace[i - 1]);
  }
  CHECK(res.objective() == doctest::Approx(objective(res.params, d, FeatureConfig::Full(), hyper)));
}

TEST_CASE("inactive parameters stay zero") {
  const auto d = testing::random_design(4, 2, 3, 200, 51);
  const auto cfg = parse_features("prop,trend");
  const auto res = fit(d, cfg, Hyperparams{});
  CHECK(res.params.b == 0.0);
  CHECK(res.params.alpha.isZero());
}

TEST_CASE("warm start from the optimum stops at once") {
  const auto d = testing::random_design(4, 2, 3, 200, 61);
  Hyperparams hyper;
  hyper.tol = 1e-10;
  const auto first = fit(d, FeatureConfig::Full(), hyper);
  const auto second = fit(d, FeatureConfig::Full(), hyper, first.params);
  CHECK(second.iterations <= 3);
  CHECK(second.objective() >= first.objective() - 1e-9 * std::abs(first.objective()));
}

TEST_CASE("strong L1 zeroes propensities") {
  const auto d = testing::random_design(4, 1, 1, 100, 71);
  Hyperparams hyper;
  hyper.beta_u = 1e4;
  const auto res = fit(d, parse_features("prop,pref"), hyper);
  CHECK(res.params.a.isZero());
  CHECK(res.params.b == 0.0);
}

TEST_CASE("smoothness pulls trend rows flat") {
  const auto d = testing::random_design(2, 2, 5, 300, 81);
  Hyperparams hyper;
  hyper.beta_g = 1e5;
  const auto res = fit(d, parse_features("trend"), hyper);
  CHECK(smoothness_penalty(res.params) < 1e-6);
}

TEST_CASE("curvature bound dominates the local curvature") {
  const auto d = testing::random_design(3, 2, 3, 100, 91);
  Hyperparams hyper;
  const auto cfg = FeatureConfig::Full();
  const auto bound = curvature_bound(d, cfg, hyper);
  const auto layout = ParamLayout::of(d);
  for (int t = 0; t < 5; ++t) {
    ModelParamsd grad, curv;
    smooth_value_and_gradient(testing::random_params(3, 2, 3, 300 + t), d, cfg, hyper, grad,
                              &curv);
    CHECK(((bound - layout.pack(curv)).array() >= -1e-12).all());
  }
}

TEST_CASE("trace_monotone") {
  CHECK(trace_monotone({-3, -2, -2, -1}, 0));
  CHECK_FALSE(trace_monotone({-3, -2, -2.5}, 1e-3));
  CHECK(trace_monotone({-3, -2, -2.0000001}, 1e-6));
}
