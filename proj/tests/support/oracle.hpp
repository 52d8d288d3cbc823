// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "topicfb/objective.hpp"
#include "topicfb/rng.hpp"

namespace testing {

using namespace topicfb;

// Independent maximizer: plain proximal gradient with a fixed step from a
// Lipschitz bound, its own gradient loop, and random restarts.
inline double oracle_maximum(const Design& d, const Hyperparams& hyper, int restarts) {
  const int n = d.num_users, k = d.num_topics, m = d.num_days;
  double lip = 0.0;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    const double row = 1.0 + d.pref(r) * d.pref(r) + 1.0 + d.feedback(r) * d.feedback(r);
    lip += 0.25 * d.weight(r) * row;
  }
  lip += 8.0 * hyper.beta_g;
  const double step = 1.0 / lip;
  auto rng = make_stream(99, "oracle", 0);
  std::normal_distribution<double> normal(0.0, 2.0);
  double best = -1e300;
  const auto cfg = FeatureConfig::Full();
  for (int s = 0; s < restarts; ++s) {
    std::vector<double> a(n), alpha(n), g(k * m);
    double b = normal(rng);
    for (auto& v : a) v = normal(rng);
    for (auto& v : alpha) v = normal(rng);
    for (auto& v : g) v = normal(rng);
    for (int it = 0; it < 60000; ++it) {
      std::vector<double> ga(n, 0.0), galpha(n, 0.0), gg(k * m, 0.0);
      double gb = 0.0;
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        const int u = d.user[r], c = d.topic[r] * m + d.day[r];
        const double eta = a[u] + b * d.pref(r) + g[c] + alpha[u] * d.feedback(r);
        const double res = d.weight(r) * (d.label(r) - 1.0 / (1.0 + std::exp(-eta)));
        ga[u] += res;
        gb += res * d.pref(r);
        gg[c] += res;
        galpha[u] += res * d.feedback(r);
      }
      for (int t = 0; t < k; ++t) {
        for (int j = 0; j + 1 < m; ++j) {
          const double diff = g[t * m + j + 1] - g[t * m + j];
          gg[t * m + j + 1] -= 2.0 * hyper.beta_g * diff;
          gg[t * m + j] += 2.0 * hyper.beta_g * diff;
        }
      }
      const double lam = step * hyper.beta_u;
      for (int u = 0; u < n; ++u) {
        a[u] = soft_threshold(a[u] + step * ga[u], lam);
        alpha[u] += step * galpha[u];
      }
      b = soft_threshold(b + step * gb, lam);
      for (int c = 0; c < k * m; ++c) g[c] += step * gg[c];
    }
    auto p = ModelParamsd::Zero(n, k, m);
    for (int u = 0; u < n; ++u) {
      p.a(u) = a[u];
      p.alpha(u) = alpha[u];
    }
    p.b = b;
    for (int t = 0; t < k; ++t) {
      for (int j = 0; j < m; ++j) p.g(t, j) = g[t * m + j];
    }
    best = std::max(best, objective(p, d, cfg, hyper));
  }
  return best;
}


}  // namespace testing
