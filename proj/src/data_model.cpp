// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "topicfb/error.hpp"

namespace topicfb {

namespace {

using json = nlohmann::json;

std::string located(const std::filesystem::path& path, std::size_t line,
                    const std::string& message) {
  return path.string() + ":" + std::to_string(line) + ": " + message;
}

bool is_jsonl(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" || ext == ".ndjson";
}

// RFC 4180 style field splitting for a single physical line.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t parse_int(const std::string& s, const char* what) {
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument(std::string("invalid integer for ") + what +
                                ": '" + s + "'");
  }
  return value;
}

double parse_real(const std::string& s, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("invalid number for ") + what +
                                ": '" + s + "'");
  }
  return value;
}

// Calls `row(fields, line_number)` for every data row of a CSV file, with
// fields ordered as `columns` (missing optional columns become "").
void for_each_csv_row(
    const std::filesystem::path& path, const std::vector<std::string>& required,
    const std::vector<std::string>& optional,
    const std::function<void(const std::vector<std::string>&, std::size_t)>& row) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> column_of;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    for (auto& f : fields) f = trim(f);
    if (!have_header) {
      have_header = true;
      std::map<std::string, int> index;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        index[fields[i]] = static_cast<int>(i);
      }
      for (const auto& name : required) {
        auto it = index.find(name);
        if (it == index.end()) {
          throw DataError(located(path, line_no, "missing column '" + name + "'"));
        }
        column_of.push_back(it->second);
      }
      for (const auto& name : optional) {
        auto it = index.find(name);
        column_of.push_back(it == index.end() ? -1 : it->second);
      }
      continue;
    }
    std::vector<std::string> ordered(column_of.size());
    for (std::size_t c = 0; c < column_of.size(); ++c) {
      const int src = column_of[c];
      if (src < 0) continue;
      if (src >= static_cast<int>(fields.size())) {
        throw DataError(located(path, line_no, "expected " +
                                                   std::to_string(src + 1) +
                                                   " fields, got " +
                                                   std::to_string(fields.size())));
      }
      ordered[c] = fields[src];
    }
    try {
      row(ordered, line_no);
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, line_no, e.what()));
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty file (no header)");
}

void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const json&)>& row) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      row(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(located(path, line_no, e.what()));
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, line_no, e.what()));
    }
  }
}

std::string id_string(const json& value, const char* key) {
  if (!value.contains(key)) {
    throw std::invalid_argument(std::string("missing key '") + key + "'");
  }
  const auto& v = value.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw std::invalid_argument(std::string("key '") + key +
                              "' must be a string or integer");
}

std::int64_t json_int(const json& value, const char* key) {
  if (!value.contains(key) || !value.at(key).is_number_integer()) {
    throw std::invalid_argument(std::string("key '") + key +
                                "' must be an integer");
  }
  return value.at(key).get<std::int64_t>();
}

void check_post(const PostEvent& post) {
  if (post.post_id.empty()) throw std::invalid_argument("empty post_id");
  if (post.user_id.empty()) throw std::invalid_argument("empty user_id");
  if (post.topic_id < 0) throw std::invalid_argument("negative topic_id");
}

}  // namespace

IngestMode parse_ingest_mode(std::string_view name) {
  if (name == "reddit") return IngestMode::Reddit;
  if (name == "twitter") return IngestMode::Twitter;
  if (name == "generic") return IngestMode::Generic;
  throw UsageError("unknown mode '" + std::string(name) +
                   "' (expected reddit, twitter or generic)");
}

std::string_view to_string(IngestMode mode) {
  switch (mode) {
    case IngestMode::Reddit: return "reddit";
    case IngestMode::Twitter: return "twitter";
    case IngestMode::Generic: return "generic";
  }
  return "reddit";
}

std::optional<Timestamp> IngestOptions::effective_thread_gap() const {
  if (thread_gap_seconds) {
    if (*thread_gap_seconds <= 0) return std::nullopt;
    return thread_gap_seconds;
  }
  if (mode == IngestMode::Twitter) return Timestamp{30};
  return std::nullopt;
}

bool operator==(const Sample& lhs, const Sample& rhs) {
  return lhs.user_idx == rhs.user_idx && lhs.topic_idx == rhs.topic_idx &&
         lhs.next_topic_idx == rhs.next_topic_idx &&
         lhs.day_idx == rhs.day_idx &&
         lhs.raw_feedback_count == rhs.raw_feedback_count &&
         lhs.has_feedback == rhs.has_feedback && lhs.delta_t == rhs.delta_t &&
         lhs.label == rhs.label && lhs.position == rhs.position;
}

std::vector<PostEvent> read_posts(const std::filesystem::path& path) {
  std::vector<PostEvent> posts;
  if (is_jsonl(path)) {
    for_each_json_line(path, [&](const json& row) {
      PostEvent post;
      post.post_id = id_string(row, "post_id");
      post.user_id = id_string(row, "user_id");
      post.timestamp = json_int(row, "timestamp");
      post.topic_id = json_int(row, "topic_id");
      if (row.contains("feedback_count") && !row.at("feedback_count").is_null()) {
        if (!row.at("feedback_count").is_number()) {
          throw std::invalid_argument("key 'feedback_count' must be a number");
        }
        post.feedback_count = row.at("feedback_count").get<double>();
      }
      check_post(post);
      posts.push_back(std::move(post));
    });
    return posts;
  }
  for_each_csv_row(path, {"post_id", "user_id", "timestamp", "topic_id"},
                   {"feedback_count"},
                   [&](const std::vector<std::string>& f, std::size_t) {
                     PostEvent post;
                     post.post_id = f[0];
                     post.user_id = f[1];
                     post.timestamp = parse_int(f[2], "timestamp");
                     post.topic_id = parse_int(f[3], "topic_id");
                     if (!f[4].empty()) {
                       post.feedback_count = parse_real(f[4], "feedback_count");
                     }
                     check_post(post);
                     posts.push_back(std::move(post));
                   });
  return posts;
}

std::vector<FeedbackEvent> read_feedback(const std::filesystem::path& path) {
  std::vector<FeedbackEvent> events;
  if (is_jsonl(path)) {
    for_each_json_line(path, [&](const json& row) {
      events.push_back({id_string(row, "post_id"), json_int(row, "timestamp")});
    });
    return events;
  }
  for_each_csv_row(path, {"post_id", "timestamp"}, {},
                   [&](const std::vector<std::string>& f, std::size_t) {
                     if (f[0].empty()) throw std::invalid_argument("empty post_id");
                     events.push_back({f[0], parse_int(f[1], "timestamp")});
                   });
  return events;
}

std::vector<PostEvent> activity_filter(std::vector<PostEvent> posts,
                                       int min_posts, IngestStats* stats) {
  if (min_posts < 1) throw UsageError("min_posts must be >= 1");
  std::unordered_map<std::string, int> counts;
  for (const auto& p : posts) ++counts[p.user_id];
  std::vector<PostEvent> kept;
  kept.reserve(posts.size());
  for (auto& p : posts) {
    if (counts[p.user_id] >= min_posts) kept.push_back(std::move(p));
  }
  if (stats) {
    for (const auto& [user, n] : counts) {
      if (n < min_posts) {
        ++stats->inactive_users_removed;
        stats->inactive_posts_removed += static_cast<std::size_t>(n);
      }
    }
  }
  return kept;
}

std::vector<PostEvent> thread_filter(std::vector<PostEvent> posts,
                                     Timestamp gap_seconds, IngestStats* stats) {
  // Per user, in time order; ties keep file order.
  std::unordered_map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < posts.size(); ++i) by_user[posts[i].user_id].push_back(i);
  std::vector<char> drop(posts.size(), 0);
  for (auto& [user, idx] : by_user) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return posts[a].timestamp < posts[b].timestamp;
    });
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
      if (posts[idx[j + 1]].timestamp - posts[idx[j]].timestamp < gap_seconds) {
        drop[idx[j]] = 1;
      }
    }
  }
  std::vector<PostEvent> kept;
  kept.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (drop[i]) {
      if (stats) ++stats->thread_discarded;
    } else {
      kept.push_back(std::move(posts[i]));
    }
  }
  return kept;
}

Dataset build_samples(std::vector<PostEvent> posts,
                      const std::vector<FeedbackEvent>* feedback,
                      const BuildOptions& options) {
  Dataset ds;
  if (options.thread_gap_seconds && *options.thread_gap_seconds > 0) {
    posts = thread_filter(std::move(posts), *options.thread_gap_seconds, &ds.stats);
  }

  {
    std::set<std::string> seen;
    for (const auto& p : posts) {
      if (!seen.insert(p.post_id).second) {
        throw DataError("duplicate post_id '" + p.post_id + "'");
      }
    }
  }

  // Users in order of first appearance; a user needs two posts to yield a
  // sample.
  std::vector<std::vector<std::size_t>> user_posts;
  {
    std::map<std::string, std::size_t> first_seen;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      auto [it, inserted] = first_seen.emplace(posts[i].user_id, user_posts.size());
      if (inserted) {
        order.push_back(posts[i].user_id);
        user_posts.emplace_back();
      }
      user_posts[it->second].push_back(i);
    }
    std::vector<std::vector<std::size_t>> kept;
    std::vector<PostEvent> retained;
    for (std::size_t u = 0; u < user_posts.size(); ++u) {
      if (user_posts[u].size() < 2) continue;
      ds.user_index[order[u]] = static_cast<int>(kept.size());
      ds.user_ids.push_back(order[u]);
      kept.push_back(std::move(user_posts[u]));
    }
    user_posts = std::move(kept);
    // Only posts of retained users define the topic set and the day range.
    std::vector<char> keep(posts.size(), 0);
    for (const auto& idx : user_posts) {
      for (auto i : idx) keep[i] = 1;
    }
    std::vector<std::size_t> remap(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (keep[i]) {
        remap[i] = retained.size();
        retained.push_back(std::move(posts[i]));
      }
    }
    for (auto& idx : user_posts) {
      for (auto& i : idx) i = remap[i];
    }
    posts = std::move(retained);
  }
  for (auto& idx : user_posts) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return posts[a].timestamp < posts[b].timestamp;
    });
  }
  ds.num_users = static_cast<int>(user_posts.size());

  if (options.num_topics) {
    ds.num_topics = *options.num_topics;
    if (ds.num_topics < 1) throw UsageError("number of topics must be >= 1");
    for (const auto& p : posts) {
      if (p.topic_id >= ds.num_topics) {
        throw DataError("topic_id " + std::to_string(p.topic_id) +
                        " out of range for K=" + std::to_string(ds.num_topics));
      }
    }
    for (int k = 0; k < ds.num_topics; ++k) {
      ds.topic_ids.push_back(k);
      ds.topic_index[k] = k;
    }
  } else {
    std::set<std::int64_t> topics;
    for (const auto& p : posts) topics.insert(p.topic_id);
    for (auto t : topics) {
      ds.topic_index[t] = static_cast<int>(ds.topic_ids.size());
      ds.topic_ids.push_back(t);
    }
    ds.num_topics = static_cast<int>(ds.topic_ids.size());
  }

  Timestamp min_ts = 0;
  Timestamp max_ts = 0;
  if (!posts.empty()) {
    auto [lo, hi] = std::minmax_element(
        posts.begin(), posts.end(),
        [](const PostEvent& a, const PostEvent& b) { return a.timestamp < b.timestamp; });
    min_ts = lo->timestamp;
    max_ts = hi->timestamp;
  }
  ds.day_origin = options.day_origin.value_or(min_ts);
  if (!posts.empty() && min_ts < ds.day_origin) {
    throw DataError("post timestamp " + std::to_string(min_ts) +
                    " precedes the day origin " + std::to_string(ds.day_origin));
  }
  const Timestamp span = max_ts - ds.day_origin;
  ds.num_days = std::max<int>(1, static_cast<int>((span + kSecondsPerDay - 1) / kSecondsPerDay));
  auto day_of = [&](Timestamp t) {
    const auto d = static_cast<int>((t - ds.day_origin) / kSecondsPerDay);
    return std::min(d, ds.num_days - 1);
  };

  // Feedback timestamps per post, sorted.
  std::unordered_map<std::string, std::vector<Timestamp>> fb_times;
  if (feedback) {
    std::unordered_map<std::string, std::size_t> post_pos;
    for (std::size_t i = 0; i < posts.size(); ++i) post_pos.emplace(posts[i].post_id, i);
    ds.stats.feedback_read = feedback->size();
    for (const auto& e : *feedback) {
      if (post_pos.count(e.post_id)) {
        fb_times[e.post_id].push_back(e.timestamp);
      } else {
        ++ds.stats.dangling_feedback;
      }
    }
    for (auto& [id, times] : fb_times) std::sort(times.begin(), times.end());
  }

  ds.daily_post_counts = Eigen::MatrixXi::Zero(ds.num_topics, ds.num_days);
  ds.user_offsets.assign(1, 0);
  ds.user_post_counts.reserve(user_posts.size());
  for (int u = 0; u < ds.num_users; ++u) {
    const auto& idx = user_posts[u];
    ds.user_post_counts.push_back(static_cast<int>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& cur = posts[idx[j]];
      ++ds.daily_post_counts(ds.topic_index.at(cur.topic_id), day_of(cur.timestamp));
      if (j == 0) continue;
      const auto& prev = posts[idx[j - 1]];
      Sample s;
      s.user_idx = u;
      s.topic_idx = ds.topic_index.at(prev.topic_id);
      s.next_topic_idx = ds.topic_index.at(cur.topic_id);
      s.day_idx = day_of(cur.timestamp);
      s.label = s.topic_idx == s.next_topic_idx ? 1 : 0;
      s.position = static_cast<int>(j - 1);
      s.delta_t = cur.timestamp - prev.timestamp;
      if (s.delta_t < 1) {
        s.delta_t = 1;
        ++ds.stats.clamped_delta_t;
      }
      if (feedback) {
        auto it = fb_times.find(prev.post_id);
        std::size_t n = 0;
        if (it != fb_times.end()) {
          n = static_cast<std::size_t>(
              std::lower_bound(it->second.begin(), it->second.end(), cur.timestamp) -
              it->second.begin());
        }
        s.raw_feedback_count = static_cast<double>(n);
        s.has_feedback = true;
      } else if (prev.feedback_count) {
        s.raw_feedback_count = *prev.feedback_count;
        s.has_feedback = true;
      } else {
        ++ds.stats.missing_feedback;
      }
      ds.samples.push_back(s);
    }
    ds.user_offsets.push_back(ds.samples.size());
  }
  return ds;
}

Dataset ingest_events(std::vector<PostEvent> posts,
                      const std::vector<FeedbackEvent>* feedback,
                      const IngestOptions& options, IngestStats base_stats) {
  IngestStats stats = base_stats;
  stats.posts_read = posts.size();
  if (auto gap = options.effective_thread_gap()) {
    posts = thread_filter(std::move(posts), *gap, &stats);
  }
  posts = activity_filter(std::move(posts), options.min_posts, &stats);

  BuildOptions build;
  build.day_origin = options.day_origin;
  build.num_topics = options.num_topics;
  Dataset ds = build_samples(std::move(posts), feedback, build);
  ds.stats.posts_read = stats.posts_read;
  ds.stats.thread_discarded = stats.thread_discarded;
  ds.stats.inactive_users_removed = stats.inactive_users_removed;
  ds.stats.inactive_posts_removed = stats.inactive_posts_removed;
  if (ds.samples.empty()) {
    throw DataError("no samples: no user has two or more retained posts");
  }
  return ds;
}

Dataset ingest(const std::filesystem::path& posts_file,
               const std::optional<std::filesystem::path>& feedback_file,
               const IngestOptions& options) {
  auto posts = read_posts(posts_file);
  if (feedback_file) {
    const auto events = read_feedback(*feedback_file);
    return ingest_events(std::move(posts), &events, options);
  }
  return ingest_events(std::move(posts), nullptr, options);
}

}  // namespace topicfb
