// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/feedback_transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topicfb/error.hpp"

namespace topicfb {

FeedbackFunctionKind parse_feedback_fn(std::string_view name) {
  if (name == "n") return FeedbackFunctionKind::RawCount;
  if (name == "logn") return FeedbackFunctionKind::LogCount;
  if (name == "pn") return FeedbackFunctionKind::CountPercentile;
  if (name == "r") return FeedbackFunctionKind::Rate;
  if (name == "logr") return FeedbackFunctionKind::LogRate;
  if (name == "pr") return FeedbackFunctionKind::RatePercentile;
  throw UsageError("unknown feedback function '" + std::string(name) +
                   "' (expected n, logn, pn, r, logr or pr)");
}

std::string_view to_string(FeedbackFunctionKind kind) {
  switch (kind) {
    case FeedbackFunctionKind::RawCount: return "n";
    case FeedbackFunctionKind::LogCount: return "logn";
    case FeedbackFunctionKind::CountPercentile: return "pn";
    case FeedbackFunctionKind::Rate: return "r";
    case FeedbackFunctionKind::LogRate: return "logr";
    case FeedbackFunctionKind::RatePercentile: return "pr";
  }
  return "pr";
}

bool is_percentile(FeedbackFunctionKind kind) {
  return kind == FeedbackFunctionKind::CountPercentile ||
         kind == FeedbackFunctionKind::RatePercentile;
}

bool is_rate(FeedbackFunctionKind kind) {
  return kind == FeedbackFunctionKind::Rate ||
         kind == FeedbackFunctionKind::LogRate ||
         kind == FeedbackFunctionKind::RatePercentile;
}

double feedback_rate(double n, double delta_t) {
  if (!(delta_t > 0.0)) {
    throw std::invalid_argument("feedback_rate: delta_t must be positive");
  }
  return n / delta_t;
}

UserFeedbackCDF::UserFeedbackCDF(std::vector<double> values)
    : sorted_(std::move(values)) {
  std::sort(sorted_.begin(), sorted_.end());
}

double UserFeedbackCDF::percentile(double x) const {
  if (sorted_.empty()) {
    throw DataError("percentile of an empty feedback history");
  }
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  const auto hi = std::upper_bound(lo, sorted_.end(), x);
  const double below = static_cast<double>(lo - sorted_.begin());
  const double ties = static_cast<double>(hi - lo);
  return (below + 0.5 * ties) / static_cast<double>(sorted_.size());
}

double percentile(const UserFeedbackCDF& cdf, double x) { return cdf.percentile(x); }

double feedback_quantity(FeedbackFunctionKind kind, const Sample& sample) {
  if (is_rate(kind)) {
    return feedback_rate(sample.raw_feedback_count, static_cast<double>(sample.delta_t));
  }
  return sample.raw_feedback_count;
}

namespace {

double shifted_log(double x) {
  if (!(x > -1.0)) {
    throw DataError("log feedback function needs quantities > -1, got " +
                    std::to_string(x));
  }
  return std::log1p(x);
}

}  // namespace

double transform(FeedbackFunctionKind kind, const Sample& sample,
                 const UserFeedbackCDF& cdf) {
  if (!sample.has_feedback) {
    throw std::invalid_argument("transform: sample has no feedback value");
  }
  const double q = feedback_quantity(kind, sample);
  switch (kind) {
    case FeedbackFunctionKind::RawCount:
    case FeedbackFunctionKind::Rate:
      return q;
    case FeedbackFunctionKind::LogCount:
    case FeedbackFunctionKind::LogRate:
      return shifted_log(q);
    case FeedbackFunctionKind::CountPercentile:
    case FeedbackFunctionKind::RatePercentile:
      return cdf.percentile(q);
  }
  return q;
}

FeedbackFeatures compute_feedback_features(const Dataset& ds,
                                           FeedbackFunctionKind kind,
                                           std::span<const char> train_mask) {
  if (train_mask.size() != ds.size()) {
    throw std::invalid_argument("compute_feedback_features: mask size mismatch");
  }
  FeedbackFeatures out;
  out.kind = kind;
  out.value.assign(ds.size(), 0.0);
  out.valid.assign(ds.size(), 0);
  out.cdfs.resize(static_cast<std::size_t>(ds.num_users));
  if (is_percentile(kind)) {
    for (int u = 0; u < ds.num_users; ++u) {
      std::vector<double> history;
      for (std::size_t i = ds.user_offsets[u]; i < ds.user_offsets[u + 1]; ++i) {
        if (train_mask[i] && ds.samples[i].has_feedback) {
          history.push_back(feedback_quantity(kind, ds.samples[i]));
        }
      }
      out.cdfs[u] = UserFeedbackCDF(std::move(history));
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    if (!s.has_feedback) continue;
    if (is_percentile(kind) && out.cdfs[s.user_idx].empty()) continue;
    out.value[i] = transform(kind, s, out.cdfs[s.user_idx]);
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace topicfb
