// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/io.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "topicfb/error.hpp"

namespace topicfb {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || begin == end) {
    throw DataError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

Json artifact_meta(const Json& config, std::uint64_t seed) {
  return Json{{"tool", kToolName}, {"version", kToolVersion}, {"seed", seed}, {"config", config}};
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw DataError("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

namespace {

// Field access that reports malformed documents as data errors.
template <typename T>
T field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const Json& doc, const char* key, T fallback) {
  if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null()) return fallback;
  return field<T>(doc, key);
}

Eigen::VectorXd vector_field(const Json& doc, const char* key, Eigen::Index size) {
  const auto values = field<std::vector<double>>(doc, key);
  if (static_cast<Eigen::Index>(values.size()) != size) {
    throw DataError(std::string("field '") + key + "' has " + std::to_string(values.size()) +
                    " entries, expected " + std::to_string(size));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), size);
}

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string meta_line(const Json& meta) { return "# " + meta.dump() + "\n"; }

Json matrix_rows(const Eigen::MatrixXi& m) {
  Json rows = Json::array();
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    std::vector<int> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(k, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json to_json(const ModelParamsd& params) {
  std::vector<double> g;
  g.reserve(params.g.size());
  for (Eigen::Index k = 0; k < params.g.rows(); ++k) {
    for (Eigen::Index j = 0; j < params.g.cols(); ++j) g.push_back(params.g(k, j));
  }
  return Json{
      {"dims",
       {{"users", params.num_users()},
        {"topics", params.num_topics()},
        {"days", params.num_days()}}},
      {"a", std::vector<double>(params.a.data(), params.a.data() + params.a.size())},
      {"b", params.b},
      {"g", g},
      {"alpha",
       std::vector<double>(params.alpha.data(), params.alpha.data() + params.alpha.size())},
  };
}

ModelParamsd params_from_json(const Json& doc) {
  const Json dims = field<Json>(doc, "dims");
  const int n = field<int>(dims, "users");
  const int k = field<int>(dims, "topics");
  const int m = field<int>(dims, "days");
  if (n < 0 || k < 0 || m < 0) throw DataError("negative parameter dimensions");
  ModelParamsd p = ModelParamsd::Zero(n, k, m);
  p.a = vector_field(doc, "a", n);
  p.b = field<double>(doc, "b");
  const Eigen::VectorXd g = vector_field(doc, "g", Eigen::Index(k) * m);
  for (int t = 0; t < k; ++t) {
    for (int j = 0; j < m; ++j) p.g(t, j) = g(Eigen::Index(t) * m + j);
  }
  p.alpha = vector_field(doc, "alpha", n);
  return p;
}

Json to_json(const FeatureConfig& config) {
  return Json{{"features", config.name()},
              {"feedback_fn", std::string(to_string(config.feedback_fn))}};
}

FeatureConfig feature_config_from_json(const Json& doc) {
  try {
    return parse_features(field<std::string>(doc, "features"),
                          parse_feedback_fn(field<std::string>(doc, "feedback_fn")));
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
}

Json to_json(const Hyperparams& hyper) {
  return Json{{"beta_u", hyper.beta_u},
              {"beta_g", hyper.beta_g},
              {"max_iters", hyper.max_iters},
              {"tol", hyper.tol}};
}

Hyperparams hyperparams_from_json(const Json& doc) {
  Hyperparams h;
  h.beta_u = field<double>(doc, "beta_u");
  h.beta_g = field<double>(doc, "beta_g");
  h.max_iters = field<int>(doc, "max_iters");
  h.tol = field<double>(doc, "tol");
  return h;
}

Json to_json(const Interval& ci) { return Json::array({ci.lo, ci.hi}); }

Json to_json(const Metrics& m) {
  return Json{{"accuracy", m.accuracy}, {"f1", m.f1}, {"mcc", m.mcc}};
}

Json to_json(const MetricSummary& s) {
  return Json{{"mean", s.mean},
              {"ci", to_json(s.ci)},
              {"se", s.se},
              {"normal_ci", to_json(s.normal_ci)},
              {"replicates", s.replicates}};
}

DatasetIndex DatasetIndex::of(const Dataset& ds) {
  return {ds.user_ids, ds.topic_ids, ds.day_origin, ds.num_days, ds.user_post_counts,
          ds.daily_post_counts};
}

void DatasetIndex::check_matches(const Dataset& ds) const {
  if (ds.user_ids != user_ids) {
    throw DataError("dataset users do not match the fitted model (" +
                    std::to_string(ds.num_users) + " users vs " +
                    std::to_string(user_ids.size()) + ")");
  }
  if (ds.topic_ids != topic_ids) throw DataError("dataset topics do not match the fitted model");
  if (ds.num_days != num_days || ds.day_origin != day_origin) {
    throw DataError("dataset day bins do not match the fitted model");
  }
}

Json to_json(const DatasetIndex& index) {
  return Json{{"user_ids", index.user_ids},
              {"topic_ids", index.topic_ids},
              {"day_origin", index.day_origin},
              {"num_days", index.num_days},
              {"user_post_counts", index.user_post_counts},
              {"daily_post_counts", matrix_rows(index.daily_post_counts)}};
}

DatasetIndex dataset_index_from_json(const Json& doc) {
  DatasetIndex index;
  index.user_ids = field<std::vector<std::string>>(doc, "user_ids");
  index.topic_ids = field<std::vector<std::int64_t>>(doc, "topic_ids");
  index.day_origin = field<Timestamp>(doc, "day_origin");
  index.num_days = field<int>(doc, "num_days");
  index.user_post_counts = field<std::vector<int>>(doc, "user_post_counts");
  const auto rows = field<std::vector<std::vector<int>>>(doc, "daily_post_counts");
  if (rows.size() != index.topic_ids.size()) throw DataError("daily_post_counts: wrong row count");
  index.daily_post_counts.resize(static_cast<Eigen::Index>(rows.size()), index.num_days);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (static_cast<int>(rows[k].size()) != index.num_days) {
      throw DataError("daily_post_counts: wrong column count");
    }
    for (int j = 0; j < index.num_days; ++j) index.daily_post_counts(k, j) = rows[k][j];
  }
  if (index.user_post_counts.size() != index.user_ids.size()) {
    throw DataError("user_post_counts: wrong length");
  }
  return index;
}

Json params_document(const ParamsFile& file, const Json& meta) {
  Json doc = to_json(file.params);
  doc["config"] = to_json(file.config);
  doc["hyper"] = to_json(file.hyper);
  doc["index"] = to_json(file.index);
  doc["fit"] = {{"iterations", file.iterations},
                {"converged", file.converged},
                {"objective", file.objective}};
  doc["meta"] = meta;
  return doc;
}

ParamsFile read_params_document(const Json& doc) {
  ParamsFile file;
  file.params = params_from_json(doc);
  file.config = feature_config_from_json(field<Json>(doc, "config"));
  file.hyper = hyperparams_from_json(field<Json>(doc, "hyper"));
  file.index = dataset_index_from_json(field<Json>(doc, "index"));
  const Json fit_info = field_or<Json>(doc, "fit", Json::object());
  file.iterations = field_or<int>(fit_info, "iterations", 0);
  file.converged = field_or<bool>(fit_info, "converged", false);
  file.objective = field_or<double>(fit_info, "objective", 0.0);
  if (file.params.num_users() != static_cast<int>(file.index.user_ids.size()) ||
      file.params.num_topics() != static_cast<int>(file.index.topic_ids.size()) ||
      file.params.num_days() != file.index.num_days) {
    throw DataError("parameter dimensions do not match the embedded dataset index");
  }
  return file;
}

Json ensemble_document(const BootstrapEnsemble& ens, const DatasetIndex& index,
                       const Json& meta) {
  Json replicates = Json::array();
  for (std::size_t r = 0; r < ens.size(); ++r) {
    Json rep = to_json(ens.replicates[r]);
    rep.erase("dims");
    rep["seed"] = ens.seeds[r];
    rep["test_metrics"] = to_json(ens.test_metrics[r]);
    rep["iterations"] = ens.fits[r].iterations;
    rep["converged"] = ens.fits[r].converged;
    rep["monotone"] = ens.fits[r].monotone;
    rep["objective"] = ens.fits[r].objective;
    replicates.push_back(std::move(rep));
  }
  Json point = to_json(ens.point.params);
  point["iterations"] = ens.point.iterations;
  point["converged"] = ens.point.converged;
  point["objective"] = ens.point.objective();
  return Json{{"config", to_json(ens.config)},
              {"hyper", to_json(ens.hyper)},
              {"holdout", ens.holdout},
              {"seed", ens.seed},
              {"index", to_json(index)},
              {"point", point},
              {"point_metrics", to_json(ens.point_metrics)},
              {"replicates", replicates},
              {"meta", meta}};
}

EnsembleFile read_ensemble_document(const Json& doc) {
  EnsembleFile file;
  auto& ens = file.ensemble;
  ens.config = feature_config_from_json(field<Json>(doc, "config"));
  ens.hyper = hyperparams_from_json(field<Json>(doc, "hyper"));
  ens.holdout = field<int>(doc, "holdout");
  ens.seed = field<std::uint64_t>(doc, "seed");
  file.index = dataset_index_from_json(field<Json>(doc, "index"));
  const Json point = field<Json>(doc, "point");
  ens.point.params = params_from_json(point);
  ens.point.iterations = field<int>(point, "iterations");
  ens.point.converged = field<bool>(point, "converged");
  ens.point.objective_trace = {field<double>(point, "objective")};
  const Json pm = field<Json>(doc, "point_metrics");
  ens.point_metrics = {field<double>(pm, "accuracy"), field<double>(pm, "f1"),
                       field<double>(pm, "mcc")};
  const auto& p = ens.point.params;
  if (p.num_users() != static_cast<int>(file.index.user_ids.size()) ||
      p.num_topics() != static_cast<int>(file.index.topic_ids.size()) ||
      p.num_days() != file.index.num_days) {
    throw DataError("ensemble dimensions do not match its dataset index");
  }
  const Json reps = field<Json>(doc, "replicates");
  if (!reps.is_array()) throw DataError("field 'replicates' must be an array");
  for (const auto& rep : reps) {
    Json with_dims = rep;
    with_dims["dims"] = {{"users", p.num_users()},
                         {"topics", p.num_topics()},
                         {"days", p.num_days()}};
    ens.replicates.push_back(params_from_json(with_dims));
    ens.seeds.push_back(field<std::uint64_t>(rep, "seed"));
    const Json m = field<Json>(rep, "test_metrics");
    ens.test_metrics.push_back(
        {field<double>(m, "accuracy"), field<double>(m, "f1"), field<double>(m, "mcc")});
    ens.fits.push_back({field<int>(rep, "iterations"), field<bool>(rep, "converged"),
                        field<bool>(rep, "monotone"), field<double>(rep, "objective")});
  }
  return file;
}

std::string params_csv(const ModelParamsd& params) {
  std::string out = "block,row,col,value\n";
  auto row = [&](const char* block, Eigen::Index r, Eigen::Index c, double v) {
    out += block;
    out += ',' + std::to_string(r) + ',' + std::to_string(c) + ',' + format_double(v) + '\n';
  };
  for (Eigen::Index i = 0; i < params.a.size(); ++i) row("a", i, 0, params.a(i));
  row("b", 0, 0, params.b);
  for (Eigen::Index k = 0; k < params.g.rows(); ++k) {
    for (Eigen::Index j = 0; j < params.g.cols(); ++j) row("g", k, j, params.g(k, j));
  }
  for (Eigen::Index i = 0; i < params.alpha.size(); ++i) row("alpha", i, 0, params.alpha(i));
  return out;
}

ModelParamsd read_params_csv(std::istream& in) {
  struct Entry {
    std::string block;
    long row, col;
    double value;
  };
  std::vector<Entry> entries;
  std::string line;
  bool header = true;
  long n = 0, k = 0, m = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = csv_split(line);
    if (cells.size() != 4) {
      throw DataError("params csv line " + std::to_string(line_no) + ": expected 4 columns");
    }
    Entry e{cells[0], static_cast<long>(parse_double(cells[1], "row")),
            static_cast<long>(parse_double(cells[2], "col")), parse_double(cells[3], "value")};
    if (e.row < 0 || e.col < 0) throw DataError("params csv: negative index");
    if (e.block == "a" || e.block == "alpha") {
      n = std::max(n, e.row + 1);
    } else if (e.block == "g") {
      k = std::max(k, e.row + 1);
      m = std::max(m, e.col + 1);
    } else if (e.block != "b") {
      throw DataError("params csv: unknown block '" + e.block + "'");
    }
    entries.push_back(std::move(e));
  }
  ModelParamsd p = ModelParamsd::Zero(static_cast<int>(n), static_cast<int>(k),
                                      static_cast<int>(m));
  const auto expected = 2 * n + 1 + k * m;
  if (static_cast<long>(entries.size()) != expected) {
    throw DataError("params csv: expected " + std::to_string(expected) + " entries, found " +
                    std::to_string(entries.size()));
  }
  for (const auto& e : entries) {
    if (e.block == "a") p.a(e.row) = e.value;
    else if (e.block == "alpha") p.alpha(e.row) = e.value;
    else if (e.block == "g") p.g(e.row, e.col) = e.value;
    else p.b = e.value;
  }
  return p;
}

std::string trace_csv(const std::vector<double>& trace, const Json& meta) {
  std::string out = meta_line(meta) + "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(trace[i]) + '\n';
  }
  return out;
}

std::string susceptibility_csv(const SusceptibilityReport& report, const Json& meta) {
  std::string out = meta_line(meta) +
                    "user_id,post_count,quartile,alpha_point,alpha_mean,ci_lo,ci_hi,class,"
                    "delta_p\n";
  for (const auto& u : report.users) {
    out += csv_quote(u.user_id) + ',' + std::to_string(u.post_count) + ',' +
           std::to_string(u.quartile + 1) + ',' + format_double(u.alpha_point) + ',' +
           format_double(u.alpha_mean) + ',' + format_double(u.alpha_ci.lo) + ',' +
           format_double(u.alpha_ci.hi) + ',' + std::string(to_string(u.cls)) + ',' +
           format_double(u.delta_p) + '\n';
  }
  return out;
}

std::vector<UserSusceptibility> read_susceptibility_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<UserSusceptibility> users;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto c = csv_split(line);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (c.size() != 9) throw DataError(where + "expected 9 columns");
    UserSusceptibility u;
    u.user_id = c[0];
    u.post_count = static_cast<int>(parse_double(c[1], "post_count"));
    u.quartile = static_cast<int>(parse_double(c[2], "quartile")) - 1;
    u.alpha_point = parse_double(c[3], "alpha_point");
    u.alpha_mean = parse_double(c[4], "alpha_mean");
    u.alpha_ci = {parse_double(c[5], "ci_lo"), parse_double(c[6], "ci_hi")};
    u.cls = parse_susceptibility_class(c[7]);
    u.delta_p = parse_double(c[8], "delta_p");
    if (u.quartile < 0 || u.quartile > 3) throw DataError(where + "quartile must be 1..4");
    users.push_back(std::move(u));
  }
  return users;
}

std::string utc_date(Timestamp t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

std::string trends_csv(const std::vector<TopicTrend>& trends, const DatasetIndex& index,
                       const Json& meta) {
  if (trends.size() != index.topic_ids.size()) {
    throw DataError("trend table and dataset index disagree on the number of topics");
  }
  std::string out =
      meta_line(meta) + "topic_id,day,date,mean_g,ci_lo,ci_hi,significant,post_count\n";
  for (std::size_t k = 0; k < trends.size(); ++k) {
    for (std::size_t j = 0; j < trends[k].days.size(); ++j) {
      const auto& d = trends[k].days[j];
      out += std::to_string(index.topic_ids[k]) + ',' + std::to_string(j) + ',' +
             utc_date(index.day_origin + static_cast<Timestamp>(j) * kSecondsPerDay) + ',' +
             format_double(d.mean) + ',' + format_double(d.ci.lo) + ',' +
             format_double(d.ci.hi) + ',' + (d.significant ? "1" : "0") + ',' +
             std::to_string(index.daily_post_counts(static_cast<Eigen::Index>(k),
                                                    static_cast<Eigen::Index>(j))) +
             '\n';
    }
  }
  return out;
}

std::string posts_csv(const std::vector<PostEvent>& posts, const Json& meta) {
  std::string out = meta_line(meta) + "post_id,user_id,timestamp,topic_id,feedback_count\n";
  for (const auto& p : posts) {
    out += csv_quote(p.post_id) + ',' + csv_quote(p.user_id) + ',' +
           std::to_string(p.timestamp) + ',' + std::to_string(p.topic_id) + ',' +
           (p.feedback_count ? format_double(*p.feedback_count) : std::string()) + '\n';
  }
  return out;
}

Json to_json(const SynthConfig& c) {
  Json events = Json::array();
  for (const auto& e : c.events) events.push_back({{"topic", e.topic}, {"day", e.day}});
  return Json{{"n_users", c.n_users},
              {"duration_days", c.duration_days},
              {"min_posts", c.min_posts},
              {"num_topics", c.num_topics},
              {"events", events},
              {"g0", c.g0},
              {"tau_days", c.tau_days},
              {"c", c.c},
              {"susceptible_fraction", c.susceptible_fraction},
              {"susceptible_alpha", c.susceptible_alpha},
              {"expected_posts", {c.min_expected_posts, c.max_expected_posts}},
              {"shortfall", c.shortfall == ShortfallPolicy::Regenerate ? "regenerate" : "drop"},
              {"start", c.start},
              {"seed", c.seed}};
}

Json truth_document(const GroundTruth& truth, const SynthConfig& config, const Json& meta) {
  Json trend = Json::array();
  for (Eigen::Index k = 0; k < truth.trend.rows(); ++k) {
    std::vector<double> row(truth.trend.cols());
    for (Eigen::Index j = 0; j < truth.trend.cols(); ++j) row[j] = truth.trend(k, j);
    trend.push_back(row);
  }
  return Json{{"user_ids", truth.user_ids},
              {"alpha", std::vector<double>(truth.alpha.data(),
                                            truth.alpha.data() + truth.alpha.size())},
              {"trend_day_centers", trend},
              {"feedback_signal", truth.feedback_signal},
              {"generator", to_json(config)},
              {"meta", meta}};
}

GroundTruth read_truth_document(const Json& doc) {
  GroundTruth t;
  t.user_ids = field<std::vector<std::string>>(doc, "user_ids");
  t.alpha = vector_field(doc, "alpha", static_cast<Eigen::Index>(t.user_ids.size()));
  const auto rows = field<std::vector<std::vector<double>>>(doc, "trend_day_centers");
  const std::size_t m = rows.empty() ? 0 : rows.front().size();
  t.trend.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != m) throw DataError("trend_day_centers: ragged rows");
    for (std::size_t j = 0; j < m; ++j) t.trend(k, j) = rows[k][j];
  }
  t.feedback_signal = field_or<std::vector<double>>(doc, "feedback_signal", {});
  return t;
}

}  // namespace topicfb
