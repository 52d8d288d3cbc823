// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "topicfb/error.hpp"
#include "topicfb/rng.hpp"

namespace topicfb {

SplitPlan split(const Dataset& ds, int holdout) {
  if (holdout < 1) throw UsageError("holdout must be >= 1");
  SplitPlan plan;
  plan.holdout = holdout;
  plan.train_mask.assign(ds.size(), 0);
  for (int u = 0; u < ds.num_users; ++u) {
    const std::size_t begin = ds.user_offsets[u];
    const std::size_t end = ds.user_offsets[u + 1];
    const std::size_t n = end - begin;
    const std::size_t n_test = n > static_cast<std::size_t>(holdout) ? holdout : 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (i < end - n_test) {
        plan.train.push_back(i);
        plan.train_mask[i] = 1;
      } else {
        plan.test.push_back(i);
      }
    }
  }
  return plan;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() <= 0) throw DataError("metrics: no predictions to score");
  const double tp = static_cast<double>(c.tp);
  const double tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);
  Metrics m;
  m.accuracy = (tp + tn) / static_cast<double>(c.total());
  const double f1_den = 2.0 * tp + fp + fn;
  m.f1 = f1_den > 0.0 ? 2.0 * tp / f1_den : 0.0;
  const double mcc_den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  m.mcc = mcc_den > 0.0 ? (tp * tn - fp * fn) / mcc_den : 0.0;
  return m;
}

int predicted_label(double p, int tie_label) {
  if (p > 0.5) return 1;
  if (p < 0.5) return 0;
  return tie_label;
}

ConfusionCounts confusion(const Eigen::VectorXd& probabilities, const Design& design,
                          int tie_label) {
  if (probabilities.size() != design.rows()) {
    throw std::invalid_argument("confusion: size mismatch");
  }
  ConfusionCounts c;
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const int yhat = predicted_label(probabilities(r), tie_label);
    const int y = design.label(r);
    if (yhat == 1 && y == 1) ++c.tp;
    if (yhat == 0 && y == 0) ++c.tn;
    if (yhat == 1 && y == 0) ++c.fp;
    if (yhat == 0 && y == 1) ++c.fn;
  }
  return c;
}

PreparedData prepare(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config) {
  if (plan.train_mask.size() != ds.size()) {
    throw std::invalid_argument("prepare: split does not match dataset");
  }
  PreparedData p;
  p.config = config;
  p.pref = topic_preference(training_topic_counts(ds, plan.train_mask), ds.num_topics);
  p.feedback = compute_feedback_features(ds, config.feedback_fn, plan.train_mask);
  p.train = make_design(ds, config, p.pref, p.feedback, plan.train);
  p.test = make_design(ds, config, p.pref, p.feedback, plan.test);
  std::vector<std::size_t> every(ds.size());
  for (std::size_t i = 0; i < every.size(); ++i) every[i] = i;
  FeatureConfig no_filter = config;
  no_filter.use_feedback = false;
  p.all = make_design(ds, no_filter, p.pref, p.feedback, every);
  const auto positives = p.train.label.sum();
  p.tie_label = 2 * positives >= p.train.rows() ? 1 : 0;
  return p;
}

std::vector<double> BootstrapEnsemble::alpha_samples(int user) const {
  std::vector<double> out;
  out.reserve(replicates.size());
  for (const auto& r : replicates) out.push_back(r.alpha(user));
  return out;
}

std::vector<double> BootstrapEnsemble::trend_samples(int topic, int day) const {
  std::vector<double> out;
  out.reserve(replicates.size());
  for (const auto& r : replicates) out.push_back(r.g(topic, day));
  return out;
}

std::vector<double> BootstrapEnsemble::accuracy_samples() const {
  std::vector<double> out;
  for (const auto& m : test_metrics) out.push_back(m.accuracy);
  return out;
}

std::vector<double> BootstrapEnsemble::f1_samples() const {
  std::vector<double> out;
  for (const auto& m : test_metrics) out.push_back(m.f1);
  return out;
}

std::vector<double> BootstrapEnsemble::mcc_samples() const {
  std::vector<double> out;
  for (const auto& m : test_metrics) out.push_back(m.mcc);
  return out;
}

Eigen::VectorXd bootstrap_weights(const Design& train, std::uint64_t replicate_seed) {
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(train.rows());
  std::mt19937_64 rng(replicate_seed);
  Eigen::Index begin = 0;
  while (begin < train.rows()) {
    Eigen::Index end = begin;
    while (end < train.rows() && train.user[end] == train.user[begin]) ++end;
    std::uniform_int_distribution<Eigen::Index> pick(begin, end - 1);
    for (Eigen::Index draw = begin; draw < end; ++draw) weights(pick(rng)) += 1.0;
    begin = end;
  }
  return weights;
}

namespace {

int resolve_threads(int requested, int jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, jobs));
}

// Runs job(i) for i in [0, jobs) on `threads` workers; rethrows the first
// failure.
template <typename Job>
void parallel_for(int jobs, int threads, Job&& job) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < jobs; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// Rows with positive weight only; unsampled rows do not enter the fit.
Design resampled(const Design& design, const Eigen::VectorXd& weights) {
  Design out;
  out.num_users = design.num_users;
  out.num_topics = design.num_topics;
  out.num_days = design.num_days;
  const auto kept = (weights.array() > 0.0).count();
  out.pref.resize(kept);
  out.feedback.resize(kept);
  out.label.resize(kept);
  out.weight.resize(kept);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    if (weights(r) <= 0.0) continue;
    out.user.push_back(design.user[r]);
    out.topic.push_back(design.topic[r]);
    out.day.push_back(design.day[r]);
    out.sample_index.push_back(design.sample_index[r]);
    out.pref(k) = design.pref(r);
    out.feedback(k) = design.feedback(r);
    out.label(k) = design.label(r);
    out.weight(k) = weights(r);
    ++k;
  }
  return out;
}

}  // namespace

BootstrapEnsemble bootstrap_fit(const Dataset& ds, const SplitPlan& plan,
                                const FeatureConfig& config, const Hyperparams& hyper,
                                const BootstrapOptions& options) {
  if (options.replicates < 2) throw UsageError("bootstrap needs at least 2 replicates");
  const PreparedData data = prepare(ds, plan, config);
  if (data.train.rows() == 0) throw DataError("bootstrap: no training samples");
  if (data.test.rows() == 0) {
    throw DataError("bootstrap: no test samples (every user has <= " +
                    std::to_string(plan.holdout) + " samples)");
  }

  BootstrapEnsemble ens;
  ens.config = config;
  ens.hyper = hyper;
  ens.holdout = plan.holdout;
  ens.seed = options.seed;
  ens.point = fit(data.train, config, hyper);
  ens.point_metrics = metrics(
      confusion(predict(ens.point.params, config, data.test), data.test, data.tie_label));

  const int b = options.replicates;
  ens.replicates.resize(b);
  ens.test_metrics.resize(b);
  ens.seeds.resize(b);
  ens.fits.resize(b);
  for (int r = 0; r < b; ++r) ens.seeds[r] = derive_seed(options.seed, "bootstrap", r);

  parallel_for(b, resolve_threads(options.threads, b), [&](int r) {
    const Design train = resampled(data.train, bootstrap_weights(data.train, ens.seeds[r]));
    FitResult res;
    try {
      res = options.warm_start ? fit(train, config, hyper, ens.point.params)
                               : fit(train, config, hyper);
    } catch (const Error& e) {
      throw Error(e.kind(), "bootstrap replicate " + std::to_string(r) + ": " + e.what());
    }
    ens.test_metrics[r] =
        metrics(confusion(predict(res.params, config, data.test), data.test, data.tie_label));
    ens.fits[r] = {res.iterations, res.converged, trace_monotone(res.objective_trace, hyper.tol),
                   res.objective()};
    ens.replicates[r] = std::move(res.params);
  });
  return ens;
}

MetricSummary summarize(std::vector<double> values, double level) {
  MetricSummary s;
  s.mean = mean(values);
  s.ci = percentile_interval(values, level);
  const double sd = values.size() > 1 ? std::sqrt(variance(values)) : 0.0;
  s.se = sd / std::sqrt(static_cast<double>(values.size()));
  boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + 0.5 * level);
  s.normal_ci = {s.mean - z * s.se, s.mean + z * s.se};
  s.replicates = std::move(values);
  return s;
}

std::vector<FeatureConfig> standard_ablation_configs() {
  return {parse_features("none"), parse_features("prop"), parse_features("pref"),
          parse_features("prop,pref"), parse_features("prop,pref,trend")};
}

std::vector<AblationRow> ablation(const Dataset& ds, const SplitPlan& plan,
                                  const std::vector<FeatureConfig>& configs,
                                  const Hyperparams& hyper, const BootstrapOptions& options,
                                  double level) {
  if (configs.empty()) throw UsageError("ablation needs at least one configuration");
  std::vector<AblationRow> rows;
  for (const auto& config : configs) {
    const auto ens = bootstrap_fit(ds, plan, config, hyper, options);
    rows.push_back({config, summarize(ens.accuracy_samples(), level),
                    summarize(ens.f1_samples(), level), summarize(ens.mcc_samples(), level)});
  }
  return rows;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_t: each sample needs at least two values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  WelchResult res;
  if (va + vb == 0.0) {
    res.t = ma == mb ? 0.0 : std::copysign(INFINITY, ma - mb);
    res.df = na + nb - 2.0;
    res.p = ma == mb ? 1.0 : 0.0;
    return res;
  }
  res.t = (ma - mb) / std::sqrt(va + vb);
  res.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  boost::math::students_t_distribution<double> dist(res.df);
  res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
  return res;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("cohens_d: each sample needs at least two values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled =
      std::sqrt(((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0));
  if (!(pooled > 0.0)) throw DataError("cohens_d: zero pooled standard deviation");
  return (mean(a) - mean(b)) / pooled;
}

Hyperparams grid_search(const Dataset& ds, const SplitPlan& plan, const FeatureConfig& config,
                        std::span<const double> beta_u_grid,
                        std::span<const double> beta_g_grid, const Hyperparams& base,
                        std::vector<GridPoint>* trials) {
  if (beta_u_grid.empty() || beta_g_grid.empty()) {
    throw UsageError("grid search needs non-empty grids");
  }
  const PreparedData data = prepare(ds, plan, config);
  if (data.test.rows() == 0) throw DataError("grid search: no test samples");
  Hyperparams best = base;
  double best_accuracy = -1.0;
  for (double bu : beta_u_grid) {
    for (double bg : beta_g_grid) {
      Hyperparams h = base;
      h.beta_u = bu;
      h.beta_g = bg;
      const auto res = fit(data.train, config, h);
      const double acc =
          metrics(confusion(predict(res.params, config, data.test), data.test, data.tie_label))
              .accuracy;
      if (trials) trials->push_back({bu, bg, acc});
      if (acc > best_accuracy) {
        best_accuracy = acc;
        best = h;
      }
    }
  }
  return best;
}

}  // namespace topicfb
