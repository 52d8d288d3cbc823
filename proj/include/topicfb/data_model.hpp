// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace topicfb {

using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

struct PostEvent {
  std::string post_id;
  std::string user_id;
  Timestamp timestamp = 0;
  std::int64_t topic_id = 0;
  // Precomputed per-post feedback (vote balance, likes, synthetic feature).
  // Used only when no timestamped feedback log is supplied.
  std::optional<double> feedback_count;
};

struct FeedbackEvent {
  std::string post_id;
  Timestamp timestamp = 0;
};

/// One topic-continuation decision: the pair (previous post, current post).
struct Sample {
  int user_idx = 0;
  int topic_idx = 0;       // topic of the previous post
  int next_topic_idx = 0;  // topic of the current post
  int day_idx = 0;         // day bin of the current post
  double raw_feedback_count = 0.0;
  bool has_feedback = false;
  Timestamp delta_t = 1;
  int label = 0;  // 1 iff next_topic_idx == topic_idx
  int position = 0;
};

enum class IngestMode { Reddit, Twitter, Generic };

IngestMode parse_ingest_mode(std::string_view name);
std::string_view to_string(IngestMode mode);

struct IngestOptions {
  IngestMode mode = IngestMode::Reddit;
  int min_posts = 50;
  // Unset: 30 s in twitter mode, disabled otherwise.
  std::optional<Timestamp> thread_gap_seconds;
  // Anchor of day bin 0; defaults to the earliest retained post.
  std::optional<Timestamp> day_origin;
  // Fixes K and requires topic ids in [0, K); otherwise K is the number of
  // distinct topic ids, densely re-indexed in ascending order.
  std::optional<int> num_topics;

  std::optional<Timestamp> effective_thread_gap() const;
};

struct IngestStats {
  std::size_t posts_read = 0;
  std::size_t feedback_read = 0;
  std::size_t dangling_feedback = 0;
  std::size_t thread_discarded = 0;
  std::size_t inactive_users_removed = 0;
  std::size_t inactive_posts_removed = 0;
  std::size_t clamped_delta_t = 0;
  std::size_t missing_feedback = 0;
};

/// Immutable after construction. Samples are grouped by user in ingestion
/// order and sorted by time within each user.
struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::size_t> user_offsets;  // size N + 1
  int num_users = 0;
  int num_topics = 0;
  int num_days = 0;
  Timestamp day_origin = 0;
  std::vector<std::string> user_ids;
  std::vector<std::int64_t> topic_ids;
  std::map<std::string, int> user_index;
  std::map<std::int64_t, int> topic_index;
  std::vector<int> user_post_counts;  // retained posts per user
  Eigen::MatrixXi daily_post_counts;  // K x M, retained posts per topic-day
  IngestStats stats;

  std::span<const Sample> user_samples(int user) const {
    return {samples.data() + user_offsets[user],
            user_offsets[user + 1] - user_offsets[user]};
  }
  std::size_t size() const { return samples.size(); }
};

bool operator==(const Sample& lhs, const Sample& rhs);

/// Reads a posts file: CSV with a header row, or JSON lines (by extension
/// .jsonl / .json). Malformed rows raise DataError naming the line.
std::vector<PostEvent> read_posts(const std::filesystem::path& path);
std::vector<FeedbackEvent> read_feedback(const std::filesystem::path& path);

/// Drops posts of users with fewer than `min_posts` posts.
std::vector<PostEvent> activity_filter(std::vector<PostEvent> posts,
                                       int min_posts,
                                       IngestStats* stats = nullptr);

/// Drops a post when the same user's next post follows within less than
/// `gap_seconds` (tweet threads).
std::vector<PostEvent> thread_filter(std::vector<PostEvent> posts,
                                     Timestamp gap_seconds,
                                     IngestStats* stats = nullptr);

struct BuildOptions {
  std::optional<Timestamp> thread_gap_seconds;
  std::optional<Timestamp> day_origin;
  std::optional<int> num_topics;
};

/// Pairs consecutive posts of each user into samples. When `feedback` is
/// given, the feedback count of a sample counts events on the previous post
/// strictly before the current post; otherwise the previous post's
/// precomputed `feedback_count` is used (missing if absent).
Dataset build_samples(std::vector<PostEvent> posts,
                      const std::vector<FeedbackEvent>* feedback,
                      const BuildOptions& options = {});

/// Full ingestion: read, thread filter, activity filter, build samples.
Dataset ingest(const std::filesystem::path& posts_file,
               const std::optional<std::filesystem::path>& feedback_file,
               const IngestOptions& options);

/// In-memory variant of ingest() on already parsed events.
Dataset ingest_events(std::vector<PostEvent> posts,
                      const std::vector<FeedbackEvent>* feedback,
                      const IngestOptions& options,
                      IngestStats base_stats = {});

}  // namespace topicfb
