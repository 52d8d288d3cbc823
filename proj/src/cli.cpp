// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/cli.hpp"

#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"

#include "topicfb/error.hpp"
#include "topicfb/evaluation.hpp"
#include "topicfb/optimizer.hpp"
#include "topicfb/susceptibility.hpp"
#include "topicfb/synthetic.hpp"

namespace topicfb {

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
T get_as(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> get_optional(const Json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return get_as<T>(v, key);
}

}  // namespace

Json to_json(const RunConfig& c) {
  return Json{
      {"command", c.command},
      {"posts", optional_json(c.posts)},
      {"feedback", optional_json(c.feedback)},
      {"mode", std::string(to_string(c.ingest.mode))},
      {"min_posts", c.ingest.min_posts},
      {"thread_gap_seconds", optional_json(c.ingest.thread_gap_seconds)},
      {"day_origin", optional_json(c.ingest.day_origin)},
      {"num_topics", optional_json(c.ingest.num_topics)},
      {"features", c.features.name()},
      {"feedback_fn", std::string(to_string(c.features.feedback_fn))},
      {"beta_u", c.hyper.beta_u},
      {"beta_g", c.hyper.beta_g},
      {"tol", c.hyper.tol},
      {"max_iters", c.hyper.max_iters},
      {"bootstrap", c.bootstrap},
      {"holdout", c.holdout},
      {"seed", c.seed},
      {"level", c.level},
      {"trend_level", c.trend_level},
      {"min_run", c.min_run},
      {"q_hi", c.q_hi},
      {"q_lo", c.q_lo},
      {"ablation", c.ablation},
      {"grid", c.grid},
      {"beta_u_grid", c.beta_u_grid},
      {"beta_g_grid", c.beta_g_grid},
      {"preset", c.preset},
      {"synth_users", optional_json(c.synth_users)},
  };
}

RunConfig run_config_from_json(const Json& doc, RunConfig c) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  std::string features = c.features.name();
  std::string feedback_fn(to_string(c.features.feedback_fn));
  for (const auto& [key, v] : doc.items()) {
    if (key == "command") {
      // Informational; the command line decides what runs.
    } else if (key == "posts") {
      c.posts = get_optional<std::string>(v, key);
    } else if (key == "feedback") {
      c.feedback = get_optional<std::string>(v, key);
    } else if (key == "mode") {
      c.ingest.mode = parse_ingest_mode(get_as<std::string>(v, key));
    } else if (key == "min_posts") {
      c.ingest.min_posts = get_as<int>(v, key);
    } else if (key == "thread_gap_seconds") {
      c.ingest.thread_gap_seconds = get_optional<Timestamp>(v, key);
    } else if (key == "day_origin") {
      c.ingest.day_origin = get_optional<Timestamp>(v, key);
    } else if (key == "num_topics") {
      c.ingest.num_topics = get_optional<int>(v, key);
    } else if (key == "features") {
      features = get_as<std::string>(v, key);
    } else if (key == "feedback_fn") {
      feedback_fn = get_as<std::string>(v, key);
    } else if (key == "beta_u") {
      c.hyper.beta_u = get_as<double>(v, key);
    } else if (key == "beta_g") {
      c.hyper.beta_g = get_as<double>(v, key);
    } else if (key == "tol") {
      c.hyper.tol = get_as<double>(v, key);
    } else if (key == "max_iters") {
      c.hyper.max_iters = get_as<int>(v, key);
    } else if (key == "bootstrap") {
      c.bootstrap = get_as<int>(v, key);
    } else if (key == "holdout") {
      c.holdout = get_as<int>(v, key);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "level") {
      c.level = get_as<double>(v, key);
    } else if (key == "trend_level") {
      c.trend_level = get_as<double>(v, key);
    } else if (key == "min_run") {
      c.min_run = get_as<int>(v, key);
    } else if (key == "q_hi") {
      c.q_hi = get_as<double>(v, key);
    } else if (key == "q_lo") {
      c.q_lo = get_as<double>(v, key);
    } else if (key == "ablation") {
      c.ablation = get_as<bool>(v, key);
    } else if (key == "grid") {
      c.grid = get_as<bool>(v, key);
    } else if (key == "beta_u_grid") {
      c.beta_u_grid = get_as<std::vector<double>>(v, key);
    } else if (key == "beta_g_grid") {
      c.beta_g_grid = get_as<std::vector<double>>(v, key);
    } else if (key == "preset") {
      c.preset = get_as<std::string>(v, key);
    } else if (key == "synth_users") {
      c.synth_users = get_optional<int>(v, key);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  c.features = parse_features(features, parse_feedback_fn(feedback_fn));
  return c;
}

namespace {

constexpr const char* kSchemas = R"(Data formats
  posts     CSV with header post_id,user_id,timestamp,topic_id[,feedback_count]
            or JSON lines with the same keys (.jsonl/.json/.ndjson).
            timestamp: integer epoch seconds. topic_id: integer label.
            feedback_count: precomputed feedback of the post (optional).
  feedback  CSV post_id,timestamp or JSON lines; one row per feedback event
            (comment, retweet, vote). Counted for a sample when it arrives
            on the previous post before the current post.
  Lines starting with '#' are ignored.

Outputs carry {tool, version, seed, config}; CSV outputs start with a
'# {...}' line holding the same JSON.

Exit status: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Errors are reported on stderr as {"error": {"kind", "message"}, "exit_code"}.)";

// Values of every flag; only those given on the command line are applied.
struct Flags {
  std::string config_file;
  std::string posts, feedback, mode;
  int min_posts = 0;
  Timestamp thread_gap = 0;
  Timestamp day_origin = 0;
  int topics = 0;
  std::string features, feedback_fn;
  double beta_u = 0, beta_g = 0, tol = 0;
  int max_iters = 0;
  int bootstrap = 0, holdout = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  double level = 0, trend_level = 0, q_hi = 0, q_lo = 0;
  int min_run = 0;
  bool ablation = false, grid = false;
  std::vector<double> beta_u_grid, beta_g_grid;
  std::string preset;
  int users = 0;

  std::string out, trace, params_csv, ensemble_out, params, ensemble, truth, summary,
      evaluation, susceptibility, susceptibility_summary;
};

void add_config_option(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_file,
                  "JSON run configuration (or an artifact embedding one); flags override it");
}

void add_ingest_options(CLI::App* sub, Flags& f) {
  sub->add_option("--posts", f.posts, "Posts file (CSV or JSON lines)");
  sub->add_option("--feedback", f.feedback, "Timestamped feedback events file");
  sub->add_option("--mode", f.mode, "Ingestion mode: reddit, twitter or generic");
  sub->add_option("--min-posts", f.min_posts, "Drop users with fewer posts (default 50)");
  sub->add_option("--thread-gap-seconds", f.thread_gap,
                  "Drop a post followed by the same user's next post within this gap "
                  "(default 30 in twitter mode, off otherwise; <= 0 disables)");
  sub->add_option("--day-origin", f.day_origin,
                  "Epoch second where day 0 starts (default: earliest post)");
  sub->add_option("--topics", f.topics, "Number of topics; topic ids must lie in [0, K)");
}

void add_model_options(CLI::App* sub, Flags& f) {
  sub->add_option("--features", f.features,
                  "Comma separated subset of prop,pref,trend,feedback, or none");
  sub->add_option("--feedback-fn", f.feedback_fn, "Feedback function: n, logn, pn, r, logr, pr");
  sub->add_option("--beta-u", f.beta_u, "L1 strength on propensity and preference weight");
  sub->add_option("--beta-g", f.beta_g, "Smoothness strength on topic trends");
  sub->add_option("--tol", f.tol, "Relative objective change that stops the optimizer");
  sub->add_option("--max-iters", f.max_iters, "Optimizer iteration cap");
  sub->add_option("--holdout", f.holdout, "Held-out samples per user (last h)");
}

void add_bootstrap_options(CLI::App* sub, Flags& f) {
  sub->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates");
  sub->add_option("--seed", f.seed, "Top-level random seed");
  sub->add_option("--threads", f.threads, "Worker threads (0: all cores)");
}

bool given(const CLI::App* sub, const std::string& name) {
  const auto* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

void apply_flags(const CLI::App* sub, const Flags& f, RunConfig& c) {
  auto feature_list = c.features.name();
  auto feedback_fn = std::string(to_string(c.features.feedback_fn));
  if (given(sub, "--posts")) c.posts = f.posts;
  if (given(sub, "--feedback")) c.feedback = f.feedback;
  if (given(sub, "--mode")) c.ingest.mode = parse_ingest_mode(f.mode);
  if (given(sub, "--min-posts")) c.ingest.min_posts = f.min_posts;
  if (given(sub, "--thread-gap-seconds")) c.ingest.thread_gap_seconds = f.thread_gap;
  if (given(sub, "--day-origin")) c.ingest.day_origin = f.day_origin;
  if (given(sub, "--topics")) c.ingest.num_topics = f.topics;
  if (given(sub, "--features")) feature_list = f.features;
  if (given(sub, "--feedback-fn")) feedback_fn = f.feedback_fn;
  if (given(sub, "--beta-u")) c.hyper.beta_u = f.beta_u;
  if (given(sub, "--beta-g")) c.hyper.beta_g = f.beta_g;
  if (given(sub, "--tol")) c.hyper.tol = f.tol;
  if (given(sub, "--max-iters")) c.hyper.max_iters = f.max_iters;
  if (given(sub, "--holdout")) c.holdout = f.holdout;
  if (given(sub, "--bootstrap")) c.bootstrap = f.bootstrap;
  if (given(sub, "--seed")) c.seed = f.seed;
  if (given(sub, "--level")) c.level = f.level;
  if (given(sub, "--trend-level")) c.trend_level = f.trend_level;
  if (given(sub, "--min-run")) c.min_run = f.min_run;
  if (given(sub, "--q-hi")) c.q_hi = f.q_hi;
  if (given(sub, "--q-lo")) c.q_lo = f.q_lo;
  if (given(sub, "--ablation")) c.ablation = f.ablation;
  if (given(sub, "--grid")) c.grid = f.grid;
  if (given(sub, "--beta-u-grid")) c.beta_u_grid = f.beta_u_grid;
  if (given(sub, "--beta-g-grid")) c.beta_g_grid = f.beta_g_grid;
  if (given(sub, "--preset")) c.preset = f.preset;
  if (given(sub, "--users")) c.synth_users = f.users;
  c.features = parse_features(feature_list, parse_feedback_fn(feedback_fn));
}

void check_levels(const RunConfig& c) {
  auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!in_unit(c.level) || !in_unit(c.trend_level)) {
    throw UsageError("interval levels must lie in (0, 1)");
  }
  if (!(c.q_hi >= 0.0 && c.q_hi <= 1.0 && c.q_lo >= 0.0 && c.q_lo <= 1.0)) {
    throw UsageError("intervention percentiles must lie in [0, 1]");
  }
  if (c.bootstrap < 2) throw UsageError("--bootstrap must be >= 2");
  if (c.holdout < 0) throw UsageError("--holdout must be >= 0");
  if (c.min_run < 1) throw UsageError("--min-run must be >= 1");
  c.hyper.validate();
}

// The "config" embedded in an artifact, or the document itself.
Json config_part(const Json& doc) {
  if (doc.is_object() && doc.contains("meta") && doc["meta"].is_object() &&
      doc["meta"].contains("config")) {
    return doc["meta"]["config"];
  }
  return doc;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

Dataset load_dataset(const RunConfig& c) {
  if (!c.posts) throw UsageError("--posts is required");
  std::optional<std::filesystem::path> feedback;
  if (c.feedback) feedback = *c.feedback;
  return ingest(*c.posts, feedback, c.ingest);
}

// Holdout 0 trains on every sample.
SplitPlan training_plan(const Dataset& ds, int holdout) {
  if (holdout >= 1) return split(ds, holdout);
  SplitPlan plan;
  plan.holdout = 0;
  plan.train_mask.assign(ds.size(), 1);
  for (std::size_t i = 0; i < ds.size(); ++i) plan.train.push_back(i);
  return plan;
}

Json ingest_stats_json(const IngestStats& s) {
  return Json{{"posts_read", s.posts_read},
              {"feedback_read", s.feedback_read},
              {"dangling_feedback", s.dangling_feedback},
              {"thread_discarded", s.thread_discarded},
              {"inactive_users_removed", s.inactive_users_removed},
              {"inactive_posts_removed", s.inactive_posts_removed},
              {"clamped_delta_t", s.clamped_delta_t},
              {"missing_feedback", s.missing_feedback}};
}

Json dataset_json(const Dataset& ds, const SplitPlan& plan) {
  return Json{{"users", ds.num_users},
              {"topics", ds.num_topics},
              {"days", ds.num_days},
              {"samples", ds.size()},
              {"train_samples", plan.train.size()},
              {"test_samples", plan.test.size()},
              {"ingest", ingest_stats_json(ds.stats)}};
}

// Truth alpha in dataset user order.
Eigen::VectorXd aligned_truth(const GroundTruth& truth,
                              const std::vector<std::string>& user_ids) {
  if (truth.user_ids.size() != user_ids.size()) {
    throw DataError("truth covers " + std::to_string(truth.user_ids.size()) +
                    " users, the estimates " + std::to_string(user_ids.size()));
  }
  std::map<std::string, double> alpha;
  for (std::size_t u = 0; u < truth.user_ids.size(); ++u) {
    alpha[truth.user_ids[u]] = truth.alpha(static_cast<Eigen::Index>(u));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(user_ids.size()));
  for (std::size_t u = 0; u < user_ids.size(); ++u) {
    const auto it = alpha.find(user_ids[u]);
    if (it == alpha.end()) throw DataError("user '" + user_ids[u] + "' is missing from truth");
    out(static_cast<Eigen::Index>(u)) = it->second;
  }
  return out;
}

double median(std::vector<double> x) { return x.empty() ? 0.0 : quantile(x, 0.5); }

Json class_summary(const std::vector<UserSusceptibility>& users) {
  std::size_t pos = 0, neg = 0, insig = 0;
  std::vector<double> gains_pos, gains_all;
  for (const auto& u : users) {
    gains_all.push_back(u.delta_p);
    switch (u.cls) {
      case SusceptibilityClass::Positive:
        ++pos;
        gains_pos.push_back(u.delta_p);
        break;
      case SusceptibilityClass::Negative: ++neg; break;
      case SusceptibilityClass::Insignificant: ++insig; break;
    }
  }
  const double n = static_cast<double>(users.size());
  Json out{{"users", users.size()},
           {"positive", pos},
           {"negative", neg},
           {"insignificant", insig},
           {"fraction_positive", n > 0 ? pos / n : 0.0},
           {"fraction_negative", n > 0 ? neg / n : 0.0},
           {"median_delta_p_positive", gains_pos.empty() ? Json(nullptr) : Json(median(gains_pos))},
           {"median_delta_p_all", median(gains_all)}};
  if (users.size() >= 4) {
    SusceptibilityReport r;
    r.users = users;
    Json rows = Json::array();
    int g = 1;
    for (const auto& q : quartile_report(r)) {
      rows.push_back({{"group", "G" + std::to_string(g++)},
                      {"min_posts", q.min_posts},
                      {"max_posts", q.max_posts},
                      {"users", q.users},
                      {"positive", q.positive},
                      {"negative", q.negative},
                      {"insignificant", q.insignificant}});
    }
    out["quartiles"] = rows;
  }
  return out;
}

void emit(std::ostream& out, const Json& line) { out << line.dump() << "\n"; }

int cmd_fit(const RunConfig& c, const Flags& f, std::ostream& out) {
  require(f.out, "--out");
  const Dataset ds = load_dataset(c);
  const SplitPlan plan = training_plan(ds, c.holdout);
  const PreparedData data = prepare(ds, plan, c.features);
  if (data.train.rows() == 0) throw DataError("no training samples");
  const FitResult res = fit(data.train, c.features, c.hyper);
  const Json meta = artifact_meta(to_json(c), c.seed);
  const ParamsFile file{res.params, c.features, c.hyper, DatasetIndex::of(ds),
                        res.iterations, res.converged, res.objective()};
  atomic_write(f.out, dump_json(params_document(file, meta)));
  if (!f.trace.empty()) atomic_write(f.trace, trace_csv(res.objective_trace, meta));
  if (!f.params_csv.empty()) {
    atomic_write(f.params_csv, "# " + meta.dump() + "\n" + params_csv(res.params));
  }
  emit(out, {{"command", "fit"},
             {"train_samples", data.train.rows()},
             {"iterations", res.iterations},
             {"converged", res.converged},
             {"objective", res.objective()}});
  return 0;
}

Json fit_health(const BootstrapEnsemble& ens) {
  int converged = 0, monotone = 0, max_iters = 0;
  for (const auto& r : ens.fits) {
    converged += r.converged ? 1 : 0;
    monotone += r.monotone ? 1 : 0;
    max_iters = std::max(max_iters, r.iterations);
  }
  return Json{{"replicates", ens.size()},
              {"converged", converged},
              {"monotone", monotone},
              {"max_iterations", max_iters},
              {"point_iterations", ens.point.iterations},
              {"point_converged", ens.point.converged}};
}

int cmd_evaluate(const RunConfig& c, const Flags& f, std::ostream& out) {
  require(f.out, "--out");
  if (c.holdout < 1) throw UsageError("--holdout must be >= 1 for evaluate");
  const Dataset ds = load_dataset(c);
  const SplitPlan plan = split(ds, c.holdout);
  Hyperparams hyper = c.hyper;
  std::vector<GridPoint> trials;
  if (c.grid) {
    hyper = grid_search(ds, plan, c.features, c.beta_u_grid, c.beta_g_grid, c.hyper, &trials);
  }
  std::vector<FeatureConfig> configs;
  if (c.ablation) {
    for (auto fc : standard_ablation_configs()) {
      fc.feedback_fn = c.features.feedback_fn;
      if (!(fc == c.features)) configs.push_back(fc);
    }
  }
  configs.push_back(c.features);

  const BootstrapOptions options{c.bootstrap, c.seed, f.threads, true};
  const Json meta = artifact_meta(to_json(c), c.seed);
  Json rows = Json::array();
  std::map<std::string, std::vector<double>> accuracy;
  for (const auto& fc : configs) {
    const auto ens = bootstrap_fit(ds, plan, fc, hyper, options);
    accuracy[fc.name()] = ens.accuracy_samples();
    rows.push_back({{"features", fc.name()},
                    {"feedback_fn", std::string(to_string(fc.feedback_fn))},
                    {"point_metrics", to_json(ens.point_metrics)},
                    {"accuracy", to_json(summarize(ens.accuracy_samples(), c.level))},
                    {"f1", to_json(summarize(ens.f1_samples(), c.level))},
                    {"mcc", to_json(summarize(ens.mcc_samples(), c.level))},
                    {"fits", fit_health(ens)}});
    if (fc == c.features && !f.ensemble_out.empty()) {
      atomic_write(f.ensemble_out,
                   dump_json(ensemble_document(ens, DatasetIndex::of(ds), meta)));
    }
  }
  Json comparisons = Json::array();
  const auto& main_acc = accuracy[c.features.name()];
  for (const auto& fc : configs) {
    if (fc == c.features) continue;
    const auto& other = accuracy[fc.name()];
    const auto w = welch_t(main_acc, other);
    comparisons.push_back({{"a", c.features.name()},
                           {"b", fc.name()},
                           {"mean_difference", mean(main_acc) - mean(other)},
                           {"t", w.t},
                           {"df", w.df},
                           {"p", w.p}});
  }
  Json report{{"meta", meta},
              {"dataset", dataset_json(ds, plan)},
              {"holdout", c.holdout},
              {"bootstrap", c.bootstrap},
              {"level", c.level},
              {"hyper", to_json(hyper)},
              {"configs", rows},
              {"comparisons", comparisons}};
  if (c.grid) {
    Json grid = Json::array();
    for (const auto& t : trials) {
      grid.push_back({{"beta_u", t.beta_u}, {"beta_g", t.beta_g}, {"accuracy", t.accuracy}});
    }
    report["grid"] = grid;
  }
  atomic_write(f.out, dump_json(report));
  Json line{{"command", "evaluate"}};
  for (const auto& row : rows) line[row["features"].get<std::string>()] = row["accuracy"]["mean"];
  emit(out, line);
  return 0;
}

int cmd_synth(const RunConfig& c, const Flags& f, std::ostream& out) {
  require(f.out, "--out");
  SynthConfig sc = synth_preset(c.preset);
  if (c.synth_users) sc.n_users = *c.synth_users;
  sc.seed = c.seed;
  const auto data = generate(sc);
  Json config = to_json(c);
  config["synth"] = to_json(sc);
  const Json meta = artifact_meta(config, c.seed);
  atomic_write(f.out, posts_csv(data.posts, meta));
  if (!f.truth.empty()) atomic_write(f.truth, dump_json(truth_document(data.truth, sc, meta)));
  emit(out, {{"command", "synth"},
             {"preset", c.preset},
             {"users", data.dataset.num_users},
             {"posts", data.posts.size()},
             {"samples", data.dataset.size()},
             {"day_origin", sc.start}});
  return 0;
}

int cmd_susceptibility(const RunConfig& c, const Flags& f, const EnsembleFile& file,
                       std::ostream& out) {
  require(f.out, "--out");
  const Dataset ds = load_dataset(c);
  file.index.check_matches(ds);
  BootstrapEnsemble ens = file.ensemble;
  if (!f.params.empty()) {
    const auto params = read_params_document(read_json(f.params));
    params.index.check_matches(ds);
    if (!(params.config == ens.config)) {
      throw DataError("params were fitted with features '" + params.config.name() +
                      "', the ensemble with '" + ens.config.name() + "'");
    }
    ens.point.params = params.params;
  }
  const SplitPlan plan = split(ds, ens.holdout);
  const PreparedData data = prepare(ds, plan, ens.config);
  const auto report = susceptibility_report(ens, ds, data, c.level, c.q_hi, c.q_lo);
  const Json meta = artifact_meta(to_json(c), c.seed);
  atomic_write(f.out, susceptibility_csv(report, meta));

  Json summary = class_summary(report.users);
  summary["level"] = c.level;
  summary["q_hi"] = c.q_hi;
  summary["q_lo"] = c.q_lo;
  if (!f.truth.empty()) {
    const auto truth = read_truth_document(read_json(f.truth));
    std::vector<SusceptibilityClass> classes;
    for (const auto& u : report.users) classes.push_back(u.cls);
    summary["detection_accuracy"] = detection_accuracy(classes, aligned_truth(truth, ds.user_ids));
  }
  if (!f.summary.empty()) {
    std::vector<int> positive;
    for (int u = 0; u < ds.num_users; ++u) {
      if (report.users[u].cls == SusceptibilityClass::Positive) positive.push_back(u);
    }
    const auto levels = intervention_levels(ens.config, data.train, c.q_hi, c.q_lo);
    Json effect = nullptr;
    try {
      if (!positive.empty()) {
        effect = feedback_effect_size(ens.point.params, ens.config, data.all, levels, positive);
      }
    } catch (const std::exception&) {
      // Too few rows or no spread: no effect size to report.
    }
    summary["effect_size_positive"] = effect;
    if (!positive.empty()) {
      const auto check = sanity_check(ds, plan, ens.config, ens.hyper, positive);
      summary["sanity_check"] = {
          {"protocol",
           "held-out accuracy on the positive users' test samples, point fits with and "
           "without the feedback feature"},
          {"users", check.users},
          {"test_samples", check.test_samples},
          {"accuracy_with_feedback", check.accuracy_with},
          {"accuracy_without_feedback", check.accuracy_without},
          {"gain", check.accuracy_with - check.accuracy_without}};
    }
    Json doc{{"meta", meta}, {"susceptibility", summary}};
    atomic_write(f.summary, dump_json(doc));
  }
  Json line{{"command", "susceptibility"},
            {"users", summary["users"]},
            {"positive", summary["positive"]},
            {"negative", summary["negative"]}};
  if (summary.contains("detection_accuracy")) {
    line["detection_accuracy"] = summary["detection_accuracy"];
  }
  emit(out, line);
  return 0;
}

int cmd_trends(const RunConfig& c, const Flags& f, const EnsembleFile& file, std::ostream& out) {
  require(f.out, "--out");
  const auto trends = trend_significance(file.ensemble, c.trend_level, c.min_run);
  const Json meta = artifact_meta(to_json(c), c.seed);
  atomic_write(f.out, trends_csv(trends, file.index, meta));
  Json runs = Json::object();
  for (std::size_t k = 0; k < trends.size(); ++k) {
    Json list = Json::array();
    for (const auto& [first, last] : trends[k].runs) list.push_back({first, last});
    runs[std::to_string(file.index.topic_ids[k])] = list;
  }
  emit(out, {{"command", "trends"}, {"significant_runs", runs}});
  return 0;
}

int cmd_report(const RunConfig& c, const Flags& f, std::ostream& out) {
  require(f.out, "--out");
  require(f.evaluation, "--evaluation");
  require(f.susceptibility, "--susceptibility");
  const Json evaluation = read_json(f.evaluation);
  const auto users = read_susceptibility_csv(f.susceptibility);
  Json suscept = class_summary(users);
  if (!f.susceptibility_summary.empty()) {
    const Json s = read_json(f.susceptibility_summary);
    if (s.contains("susceptibility")) suscept["details"] = s["susceptibility"];
  }
  if (!f.truth.empty()) {
    const auto truth = read_truth_document(read_json(f.truth));
    std::vector<std::string> ids;
    std::vector<SusceptibilityClass> classes;
    for (const auto& u : users) {
      ids.push_back(u.user_id);
      classes.push_back(u.cls);
    }
    suscept["detection_accuracy"] = detection_accuracy(classes, aligned_truth(truth, ids));
  }
  Json report{{"meta", artifact_meta(to_json(c), c.seed)},
              {"evaluation", evaluation},
              {"susceptibility", suscept}};
  atomic_write(f.out, dump_json(report));
  emit(out, {{"command", "report"}, {"users", suscept["users"]}});
  return 0;
}

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numerical: return "numerical";
  }
  return "data";
}

int report_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  const int code = static_cast<int>(kind);
  err << Json{{"error", {{"kind", kind_name(kind)}, {"message", message}}}, {"exit_code", code}}
             .dump()
      << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate how community feedback affects topic continuation.", "topicfb"};
  app.footer(kSchemas);
  app.require_subcommand(1);
  Flags f;

  auto* fit_cmd = app.add_subcommand("fit", "Fit the model on the training samples");
  add_config_option(fit_cmd, f);
  add_ingest_options(fit_cmd, f);
  add_model_options(fit_cmd, f);
  fit_cmd->add_option("--seed", f.seed, "Seed recorded in the artifacts");
  fit_cmd->add_option("--out", f.out, "Parameter file (JSON)");
  fit_cmd->add_option("--trace", f.trace, "Objective trace (CSV)");
  fit_cmd->add_option("--params-csv", f.params_csv, "Parameters as a CSV table");

  auto* eval_cmd =
      app.add_subcommand("evaluate", "Bootstrap evaluation on a last-h holdout");
  add_config_option(eval_cmd, f);
  add_ingest_options(eval_cmd, f);
  add_model_options(eval_cmd, f);
  add_bootstrap_options(eval_cmd, f);
  eval_cmd->add_option("--level", f.level, "Interval level (default 0.99)");
  eval_cmd->add_flag("--ablation", f.ablation, "Also evaluate the standard feature ladder");
  eval_cmd->add_flag("--grid", f.grid, "Choose beta_u and beta_g by holdout accuracy first");
  eval_cmd->add_option("--beta-u-grid", f.beta_u_grid, "Grid for beta_u")->delimiter(',');
  eval_cmd->add_option("--beta-g-grid", f.beta_g_grid, "Grid for beta_g")->delimiter(',');
  eval_cmd->add_option("--out", f.out, "Report (JSON)");
  eval_cmd->add_option("--ensemble", f.ensemble_out,
                       "Write the ensemble of the --features model (JSON)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_config_option(synth_cmd, f);
  synth_cmd->add_option("--preset", f.preset, "paper-c1, paper-c0 or null");
  synth_cmd->add_option("--users", f.users, "Override the number of users");
  synth_cmd->add_option("--seed", f.seed, "Random seed");
  synth_cmd->add_option("--out", f.out, "Posts file (CSV, ingestion format)");
  synth_cmd->add_option("--truth", f.truth, "Ground truth (JSON)");

  auto* susc_cmd =
      app.add_subcommand("susceptibility", "Classify users by their susceptibility interval");
  add_config_option(susc_cmd, f);
  add_ingest_options(susc_cmd, f);
  susc_cmd->add_option("--ensemble", f.ensemble, "Ensemble written by evaluate")->required();
  susc_cmd->add_option("--params", f.params, "Point fit written by fit (overrides the ensemble's)");
  susc_cmd->add_option("--level", f.level, "Interval level (default 0.99)");
  susc_cmd->add_option("--q-hi", f.q_hi, "High intervention user-percentile (default 0.99)");
  susc_cmd->add_option("--q-lo", f.q_lo, "Low intervention user-percentile (default 0.5)");
  susc_cmd->add_option("--truth", f.truth, "Ground truth of a synthetic dataset");
  susc_cmd->add_option("--out", f.out, "Per-user table (CSV)");
  susc_cmd->add_option("--summary", f.summary,
                       "Summary with quartiles, effect size and sanity check (JSON)");

  auto* trends_cmd = app.add_subcommand("trends", "Daily topic trends with significance");
  add_config_option(trends_cmd, f);
  trends_cmd->add_option("--ensemble", f.ensemble, "Ensemble written by evaluate")->required();
  trends_cmd->add_option("--trend-level", f.trend_level, "Interval level (default 0.95)");
  trends_cmd->add_option("--min-run", f.min_run, "Shortest significant run in days (default 3)");
  trends_cmd->add_option("--out", f.out, "Per topic-day table (CSV)");

  auto* report_cmd = app.add_subcommand("report", "Merge evaluation and susceptibility results");
  add_config_option(report_cmd, f);
  report_cmd->add_option("--evaluation", f.evaluation, "Report written by evaluate");
  report_cmd->add_option("--susceptibility", f.susceptibility,
                         "Table written by susceptibility");
  report_cmd->add_option("--susceptibility-summary", f.susceptibility_summary,
                         "Summary written by susceptibility --summary");
  report_cmd->add_option("--truth", f.truth, "Ground truth of a synthetic dataset");
  report_cmd->add_option("--out", f.out, "Merged summary (JSON)");

  std::vector<const char*> argv{"topicfb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report_error(err, ErrorKind::Usage, e.what());
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    RunConfig config;
    std::optional<EnsembleFile> ensemble;
    if (!f.ensemble.empty()) {
      const Json doc = read_json(f.ensemble);
      ensemble = read_ensemble_document(doc);
      config = run_config_from_json(config_part(doc), config);
    }
    if (!f.config_file.empty()) config = run_config_from_json(config_part(read_json(f.config_file)), config);
    apply_flags(sub, f, config);
    config.command = sub->get_name();
    check_levels(config);

    const auto& name = sub->get_name();
    if (name == "fit") return cmd_fit(config, f, out);
    if (name == "evaluate") return cmd_evaluate(config, f, out);
    if (name == "synth") return cmd_synth(config, f, out);
    if (name == "susceptibility") return cmd_susceptibility(config, f, *ensemble, out);
    if (name == "trends") return cmd_trends(config, f, *ensemble, out);
    if (name == "report") return cmd_report(config, f, out);
    return report_error(err, ErrorKind::Usage, "unknown command '" + name + "'");
  } catch (const Error& e) {
    return report_error(err, e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(err, ErrorKind::Data, e.what());
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace topicfb
