// Apache License, Version 2.0, refer to LICENSE.txt

#include "doctest.h"
#include "support/helpers.hpp"
#include "topicfb/data_model.hpp"
#include "topicfb/error.hpp"

using namespace topicfb;
using testing::post;

TEST_CASE("two posts with feedback make one sample") {
  std::vector<PostEvent> posts{post("p1", "u", 1000, 5), post("p2", "u", 4600, 5)};
  std::vector<FeedbackEvent> fb{{"p1", 1100}, {"p1", 2000}, {"p1", 3000}};
  const auto ds = build_samples(posts, &fb);
  REQUIRE(ds.size() == 1);
  const auto& s = ds.samples[0];
  CHECK(s.label == 1);
  CHECK(s.raw_feedback_count == 3.0);
  CHECK(s.has_feedback);
  CHECK(s.delta_t == 3600);
}

TEST_CASE("a single post has no predecessor") {
  std::vector<PostEvent> posts{post("p1", "u", 1000, 0)};
  const auto ds = build_samples(posts, nullptr);
  CHECK(ds.size() == 0);
  CHECK(ds.num_users == 0);
}

TEST_CASE("thread filter drops posts 20s apart at a 30s gap") {
  std::vector<PostEvent> posts{post("p1", "u", 1000, 0), post("p2", "u", 1020, 0)};
  auto kept = thread_filter(posts, 30);
  CHECK(kept.size() == 1);
  CHECK(build_samples(kept, nullptr).size() == 0);

  IngestOptions opt;
  opt.mode = IngestMode::Twitter;
  opt.min_posts = 1;
  CHECK(opt.effective_thread_gap() == 30);
  CHECK_THROWS_AS(ingest_events(posts, nullptr, opt), DataError);
}

TEST_CASE("thread gap defaults by mode") {
  IngestOptions opt;
  opt.mode = IngestMode::Reddit;
  CHECK_FALSE(opt.effective_thread_gap().has_value());
  opt.thread_gap_seconds = 0;
  opt.mode = IngestMode::Twitter;
  CHECK_FALSE(opt.effective_thread_gap().has_value());
  opt.thread_gap_seconds = 60;
  CHECK(opt.effective_thread_gap() == 60);
}

TEST_CASE("activity filter boundary") {
  std::vector<PostEvent> posts;
  for (int i = 0; i < 49; ++i) posts.push_back(post("a" + std::to_string(i), "a", i, 0));
  for (int i = 0; i < 50; ++i) posts.push_back(post("b" + std::to_string(i), "b", i, 0));
  IngestStats stats;
  const auto kept = activity_filter(posts, 50, &stats);
  CHECK(kept.size() == 50);
  for (const auto& p : kept) CHECK(p.user_id == "b");
  CHECK(stats.inactive_users_removed == 1);
  CHECK(stats.inactive_posts_removed == 49);

  CHECK(activity_filter(posts, 1).size() == posts.size());
  CHECK_THROWS_AS(activity_filter(posts, 0), UsageError);
}

TEST_CASE("feedback at the next post's timestamp is not counted") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p2", "u", 100, 0)};
  std::vector<FeedbackEvent> fb{{"p1", 99}, {"p1", 100}};
  CHECK(build_samples(posts, &fb).samples[0].raw_feedback_count == 1.0);
}

TEST_CASE("feedback is censored at the next post") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p2", "u", 100, 0)};
  std::vector<FeedbackEvent> fb{{"p1", 10}, {"p1", 50}, {"p1", 150}, {"p1", 200}, {"p1", 900}};
  CHECK(build_samples(posts, &fb).samples[0].raw_feedback_count == 2.0);
}

TEST_CASE("continuation labels") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 7), post("p2", "u", 10, 7),
                               post("p3", "u", 20, 9)};
  const auto ds = build_samples(posts, nullptr);
  REQUIRE(ds.size() == 2);
  CHECK(ds.samples[0].label == 1);
  CHECK(ds.samples[1].label == 0);
  CHECK(ds.samples[1].topic_idx == ds.topic_index.at(7));
  CHECK(ds.samples[1].next_topic_idx == ds.topic_index.at(9));
  CHECK_FALSE(ds.samples[0].has_feedback);
  CHECK(ds.stats.missing_feedback == 2);
}

TEST_CASE("posts are ordered by time within a user") {
  std::vector<PostEvent> posts{post("p3", "u", 20, 1), post("p1", "u", 0, 0),
                               post("p2", "u", 10, 0)};
  const auto ds = build_samples(posts, nullptr);
  REQUIRE(ds.size() == 2);
  CHECK(ds.samples[0].label == 1);
  CHECK(ds.samples[1].label == 0);
  CHECK(ds.samples[0].position == 0);
  CHECK(ds.samples[1].position == 1);
}

TEST_CASE("day bins") {
  const Timestamp day = 86400;
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p2", "u", day - 1, 0),
                               post("p3", "u", day, 0), post("p4", "u", 2 * day + 5, 0)};
  const auto ds = build_samples(posts, nullptr);
  CHECK(ds.num_days == 3);
  CHECK(ds.samples[0].day_idx == 0);
  CHECK(ds.samples[1].day_idx == 1);
  CHECK(ds.samples[2].day_idx == 2);
  CHECK(ds.daily_post_counts.sum() == 4);

  BuildOptions opt;
  opt.day_origin = 10;
  CHECK_THROWS_AS(build_samples(posts, nullptr, opt), DataError);
}

TEST_CASE("posts on a single instant give one day") {
  std::vector<PostEvent> posts{post("p1", "u", 5, 0), post("p2", "u", 5, 1)};
  const auto ds = build_samples(posts, nullptr);
  CHECK(ds.num_days == 1);
  CHECK(ds.samples[0].delta_t == 1);
  CHECK(ds.stats.clamped_delta_t == 1);
}

TEST_CASE("fixed topic count validates ids") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p2", "u", 5, 3)};
  BuildOptions opt;
  opt.num_topics = 3;
  CHECK_THROWS_AS(build_samples(posts, nullptr, opt), DataError);
  opt.num_topics = 4;
  const auto ds = build_samples(posts, nullptr, opt);
  CHECK(ds.num_topics == 4);
  CHECK(ds.samples[0].next_topic_idx == 3);
}

TEST_CASE("duplicate post ids are rejected") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p1", "v", 5, 0)};
  CHECK_THROWS_AS(build_samples(posts, nullptr), DataError);
}

TEST_CASE("dangling feedback is counted") {
  std::vector<PostEvent> posts{post("p1", "u", 0, 0), post("p2", "u", 5, 0)};
  std::vector<FeedbackEvent> fb{{"zz", 1}, {"p1", 1}};
  const auto ds = build_samples(posts, &fb);
  CHECK(ds.stats.dangling_feedback == 1);
  CHECK(ds.stats.feedback_read == 2);
}

TEST_CASE("user offsets partition the samples") {
  std::vector<PostEvent> posts{post("a1", "a", 0, 0), post("b1", "b", 1, 0),
                               post("a2", "a", 2, 1), post("b2", "b", 3, 0),
                               post("a3", "a", 4, 1), post("c1", "c", 5, 0)};
  const auto ds = build_samples(posts, nullptr);
  CHECK(ds.num_users == 2);
  CHECK(ds.user_ids == std::vector<std::string>{"a", "b"});
  CHECK(ds.user_samples(0).size() == 2);
  CHECK(ds.user_samples(1).size() == 1);
  CHECK(ds.user_post_counts == std::vector<int>{3, 2});
}

TEST_CASE("reading CSV and JSON lines") {
  testing::TempDir dir("data_model");
  testing::write_file(dir / "posts.csv",
                      "# comment\npost_id,user_id,timestamp,topic_id\n"
                      "p1,u,0,1\np2,u,60,1\n\"p,3\",u,120,2\n");
  testing::write_file(dir / "fb.csv", "post_id,timestamp\np1,30\np1,90\n");
  auto posts = read_posts(dir / "posts.csv");
  REQUIRE(posts.size() == 3);
  CHECK(posts[2].post_id == "p,3");
  CHECK_FALSE(posts[0].feedback_count.has_value());

  testing::write_file(dir / "posts.jsonl",
                      "{\"post_id\":\"p1\",\"user_id\":7,\"timestamp\":0,\"topic_id\":1}\n"
                      "\n{\"post_id\":\"p2\",\"user_id\":7,\"timestamp\":60,\"topic_id\":1,"
                      "\"feedback_count\":4}\n");
  auto jposts = read_posts(dir / "posts.jsonl");
  REQUIRE(jposts.size() == 2);
  CHECK(jposts[0].user_id == "7");
  CHECK(*jposts[1].feedback_count == 4.0);

  IngestOptions opt;
  opt.min_posts = 1;
  const auto ds = ingest(dir / "posts.csv", dir / "fb.csv", opt);
  CHECK(ds.size() == 2);
  CHECK(ds.samples[0].raw_feedback_count == 1.0);
  CHECK(ds.samples[1].raw_feedback_count == 0.0);
}

TEST_CASE("malformed input raises data errors") {
  testing::TempDir dir("data_model_bad");
  testing::write_file(dir / "a.csv", "post_id,user_id,timestamp,topic_id\np1,u,abc,1\n");
  CHECK_THROWS_AS(read_posts(dir / "a.csv"), DataError);
  testing::write_file(dir / "b.csv", "post_id,user_id,topic_id\np1,u,1\n");
  CHECK_THROWS_AS(read_posts(dir / "b.csv"), DataError);
  testing::write_file(dir / "c.jsonl", "{\"post_id\":\"p1\",\"user_id\":\"u\"}\n");
  CHECK_THROWS_AS(read_posts(dir / "c.jsonl"), DataError);
  CHECK_THROWS_AS(read_posts(dir / "missing.csv"), DataError);
  CHECK_THROWS_AS(parse_ingest_mode("facebook"), UsageError);
}
