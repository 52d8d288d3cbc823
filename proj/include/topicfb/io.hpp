// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "topicfb/data_model.hpp"
#include "topicfb/evaluation.hpp"
#include "topicfb/model.hpp"
#include "topicfb/objective.hpp"
#include "topicfb/susceptibility.hpp"
#include "topicfb/synthetic.hpp"

namespace topicfb {

using Json = nlohmann::json;

inline constexpr std::string_view kToolName = "topicfb";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
/// Strict decimal parse; throws DataError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what = "number");

/// {"tool", "version", "seed", "config"}, embedded in every artifact.
Json artifact_meta(const Json& config, std::uint64_t seed);

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
Json read_json(const std::filesystem::path& path);
/// Two-space indented, keys sorted, trailing newline.
std::string dump_json(const Json& doc);

Json to_json(const ModelParamsd& params);
/// Throws DataError on missing fields or inconsistent dimensions.
ModelParamsd params_from_json(const Json& doc);

Json to_json(const FeatureConfig& config);
FeatureConfig feature_config_from_json(const Json& doc);
Json to_json(const Hyperparams& hyper);
Hyperparams hyperparams_from_json(const Json& doc);
Json to_json(const Interval& ci);
Json to_json(const Metrics& m);
Json to_json(const MetricSummary& s);

/// The slice of a Dataset that fitted parameters are indexed by.
struct DatasetIndex {
  std::vector<std::string> user_ids;
  std::vector<std::int64_t> topic_ids;
  Timestamp day_origin = 0;
  int num_days = 0;
  std::vector<int> user_post_counts;
  Eigen::MatrixXi daily_post_counts;  // K x M

  static DatasetIndex of(const Dataset& ds);
  /// Throws DataError unless `ds` has the same users, topics and days.
  void check_matches(const Dataset& ds) const;
};

Json to_json(const DatasetIndex& index);
DatasetIndex dataset_index_from_json(const Json& doc);

/// A fitted model as written by `fit`: {a, b, g (row-major, K x M), alpha,
/// dims, config, hyper, index, fit, meta}.
struct ParamsFile {
  ModelParamsd params;
  FeatureConfig config;
  Hyperparams hyper;
  DatasetIndex index;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

Json params_document(const ParamsFile& file, const Json& meta);
ParamsFile read_params_document(const Json& doc);

/// Bootstrap ensemble with the dataset index it was fitted on.
struct EnsembleFile {
  BootstrapEnsemble ensemble;
  DatasetIndex index;
};

Json ensemble_document(const BootstrapEnsemble& ensemble, const DatasetIndex& index,
                       const Json& meta);
EnsembleFile read_ensemble_document(const Json& doc);

/// Long-format parameter table "block,row,col,value"; lossless.
std::string params_csv(const ModelParamsd& params);
ModelParamsd read_params_csv(std::istream& in);

/// CSV artifacts start with "# " and the compact meta JSON; the ingestion
/// readers skip such lines.
std::string trace_csv(const std::vector<double>& trace, const Json& meta);
std::string susceptibility_csv(const SusceptibilityReport& report, const Json& meta);
std::vector<UserSusceptibility> read_susceptibility_csv(const std::filesystem::path& path);
std::string trends_csv(const std::vector<TopicTrend>& trends, const DatasetIndex& index,
                       const Json& meta);
/// Posts in the ingestion format, with the feedback_count column.
std::string posts_csv(const std::vector<PostEvent>& posts, const Json& meta);

Json to_json(const SynthConfig& config);
Json truth_document(const GroundTruth& truth, const SynthConfig& config, const Json& meta);
GroundTruth read_truth_document(const Json& doc);

/// "YYYY-MM-DD" (UTC) of an epoch timestamp.
std::string utc_date(Timestamp t);

}  // namespace topicfb
