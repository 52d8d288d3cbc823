// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "topicfb/data_model.hpp"

namespace topicfb {

/// The candidate mappings from raw feedback to the model feature f.
enum class FeedbackFunctionKind {
  RawCount,         // n
  LogCount,         // log(n + 1)
  CountPercentile,  // P(N < n) for the author
  Rate,             // r = n / dt, per second
  LogRate,          // log(r + 1)
  RatePercentile,   // P(R < r) for the author
};

/// CLI names: n, logn, pn, r, logr, pr.
FeedbackFunctionKind parse_feedback_fn(std::string_view name);
std::string_view to_string(FeedbackFunctionKind kind);

bool is_percentile(FeedbackFunctionKind kind);
bool is_rate(FeedbackFunctionKind kind);

double feedback_rate(double n, double delta_t);

/// Empirical distribution of one author's training-period feedback
/// quantities. Queries use the mid-rank convention: values equal to x count
/// one half.
class UserFeedbackCDF {
 public:
  UserFeedbackCDF() = default;
  explicit UserFeedbackCDF(std::vector<double> values);

  double percentile(double x) const;
  bool empty() const { return sorted_.empty(); }
  std::size_t size() const { return sorted_.size(); }
  std::span<const double> values() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

double percentile(const UserFeedbackCDF& cdf, double x);

/// n for count kinds, n / dt for rate kinds.
double feedback_quantity(FeedbackFunctionKind kind, const Sample& sample);

/// Feature value f of one sample; `cdf` is consulted only by the percentile
/// kinds.
double transform(FeedbackFunctionKind kind, const Sample& sample,
                 const UserFeedbackCDF& cdf);

/// Per-sample feature values for a whole dataset with CDFs frozen from the
/// training samples (`train_mask[i] != 0`).
struct FeedbackFeatures {
  FeedbackFunctionKind kind = FeedbackFunctionKind::RatePercentile;
  std::vector<UserFeedbackCDF> cdfs;  // per user; empty for non-percentile kinds
  std::vector<double> value;          // per sample
  std::vector<char> valid;            // 0 when feedback is missing
};

FeedbackFeatures compute_feedback_features(const Dataset& ds,
                                           FeedbackFunctionKind kind,
                                           std::span<const char> train_mask);

}  // namespace topicfb
